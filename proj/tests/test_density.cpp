#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "swn/density.hpp"
#include "swn/rng.hpp"
#include "swn/stats.hpp"
#include "swn/theory.hpp"

using namespace swn;

namespace {

// 20 valid (kappa, alpha) pairs strictly inside the achievable region.
std::vector<std::pair<double, double>> valid_grid() {
  std::vector<std::pair<double, double>> grid;
  for (double kappa : {0.05, 0.1, 0.3, 0.6, 0.9}) {
    const double as = theory::alpha_star(kappa).alpha_star;
    for (double f : {0.25, 0.5, 0.75, 0.95}) {
      grid.emplace_back(kappa, f * as);
    }
  }
  return grid;
}

} // namespace

TEST_CASE("density_params derives the marginal-law parameter bundle", "[density]") {
  const auto p = density::density_params(0.1, 0.2);
  const double as = oracle::alpha_star_oracle(0.1);
  const double xi = oracle::xi_of_kappa(0.1);
  CHECK(p.alpha_star == Catch::Approx(as).margin(1e-10));
  CHECK(p.xi == Catch::Approx(xi).margin(1e-10));
  CHECK(p.scale_sq == Catch::Approx(0.2 / (as * (as - 0.2))).margin(1e-9));
  CHECK(p.gap == Catch::Approx(xi * std::sqrt(0.2 / (as * (as - 0.2))))
                     .margin(1e-9));
  CHECK(p.gap > 0.0);
  CHECK(p.scale() > 0.0);

  SECTION("gap grows without bound toward the boundary") {
    const double near = theory::alpha_star(0.1).alpha_star * (1.0 - 1e-10);
    CHECK(density::density_params(0.1, near).gap > 1e3);
  }
  SECTION("domain errors") {
    CHECK_THROWS_AS(density::density_params(0.1, 0.44), std::domain_error);
    CHECK_THROWS_AS(density::density_params(0.1, 0.9), std::domain_error);
    CHECK_THROWS_AS(density::density_params(0.0, 0.2), std::domain_error);
    CHECK_THROWS_AS(density::density_params(1.0, 0.2), std::domain_error);
    CHECK_THROWS_AS(density::density_params(0.1, 0.0), std::domain_error);
  }
}

TEST_CASE("pdf shape: gap, symmetry, boundary value", "[density]") {
  const auto p = density::density_params(0.1, 0.2);
  CHECK(density::pdf(0.0, p) == 0.0);
  CHECK(density::pdf(0.5 * p.gap, p) == 0.0);
  CHECK(density::pdf(-0.99 * p.gap, p) == 0.0);
  const double just_outside = p.gap * (1.0 + 1e-9);
  const double phi_xi =
      std::exp(-0.5 * p.xi * p.xi) / std::sqrt(2.0 * 3.14159265358979323846);
  CHECK(density::pdf(just_outside, p) ==
        Catch::Approx(phi_xi / (p.kappa * p.scale())).epsilon(1e-6));
  for (double z : {1.1, 1.7, 2.9, 6.0}) {
    CHECK(density::pdf(z * p.gap, p) == density::pdf(-z * p.gap, p));
  }
}

TEST_CASE("pdf integrates to one on a 20-point parameter grid", "[density]") {
  for (const auto& [kappa, alpha] : valid_grid()) {
    const auto p = density::density_params(kappa, alpha);
    const double upper = p.gap + 50.0 * p.scale();
    const double mass = 2.0 * oracle::integrate(
                                  [&](double z) { return density::pdf(z, p); },
                                  p.gap, upper, 1e-12);
    INFO("kappa=" << kappa << " alpha=" << alpha);
    CHECK(std::abs(mass - 1.0) <= 1e-8);
  }
}

TEST_CASE("pdf second moment matches the theory composition", "[density]") {
  const auto p = density::density_params(0.1, 0.2);
  const double upper = p.gap + 60.0 * p.scale();
  const double second = 2.0 * oracle::integrate(
                                  [&](double z) {
                                    return z * z * density::pdf(z, p);
                                  },
                                  p.gap, upper, 1e-12);
  // E[zeta^2] = sigma^2 * alpha_star / kappa, and kappa E[zeta^2] equals the
  // second moment of the synthesized observation entries.
  CHECK(second ==
        Catch::Approx(p.scale_sq * p.alpha_star / p.kappa).epsilon(1e-9));
  CHECK(0.1 * second ==
        Catch::Approx(theory::second_moment_achievable(0.2, 0.1))
            .epsilon(1e-9));
}

TEST_CASE("cdf is the analytic integral of pdf", "[density]") {
  const auto p = density::density_params(0.1, 0.2);
  CHECK(density::cdf(-1e9, p) == Catch::Approx(0.0).margin(1e-300));
  CHECK(density::cdf(1e9, p) == 1.0);
  CHECK(density::cdf(0.0, p) == 0.5);
  CHECK(density::cdf(-0.5 * p.gap, p) == 0.5);
  CHECK(density::cdf(0.99 * p.gap, p) == 0.5);

  SECTION("derivative matches pdf outside the gap") {
    // Checked where the cdf is well away from 1: central differences of a
    // value pinned at ~1 lose the signal to rounding in the far tail (that
    // region is covered by the survival-mass quadrature below).
    for (double z : {1.01, 1.3, 2.0}) {
      const double zeta = z * p.gap;
      const double h = 1e-5 * p.scale();
      const double numeric =
          (density::cdf(zeta + h, p) - density::cdf(zeta - h, p)) / (2.0 * h);
      CHECK(numeric == Catch::Approx(density::pdf(zeta, p)).epsilon(1e-6));
    }
  }
  SECTION("quadrature agreement of tail mass") {
    const double zeta = 2.0 * p.gap;
    const double upper = p.gap + 60.0 * p.scale();
    const double tail = oracle::integrate(
        [&](double z) { return density::pdf(z, p); }, zeta, upper, 1e-12);
    CHECK(1.0 - density::cdf(zeta, p) == Catch::Approx(tail).epsilon(1e-8));
  }
}

TEST_CASE("sampler draws exactly from the truncated law", "[density]") {
  const auto p = density::density_params(0.1, 0.2);
  rng::Stream stream(424242, "density-sampler");

  const std::size_t count = 100000;
  std::vector<double> draws(count);
  for (auto& d : draws) d = density::sample_nonzero(p, stream);

  SECTION("support: |zeta| >= gap always") {
    for (double d : draws) REQUIRE(std::abs(d) >= p.gap);
  }
  SECTION("symmetry: mean within 4 standard errors of zero") {
    const double mu = stats::mean(draws);
    const double se = stats::std_error(draws, mu);
    CHECK(std::abs(mu) <= 4.0 * se);
  }
  SECTION("second moment within 1% of sigma^2 alpha_star / kappa") {
    std::vector<double> sq(draws.size());
    for (std::size_t i = 0; i < draws.size(); ++i) sq[i] = draws[i] * draws[i];
    const double m2 = stats::mean(sq);
    CHECK(m2 == Catch::Approx(p.scale_sq * p.alpha_star / p.kappa)
                    .epsilon(0.01));
  }
  SECTION("KS distance against the analytic CDF <= 0.01") {
    std::vector<double> sorted = draws;
    std::sort(sorted.begin(), sorted.end());
    const double ks = stats::ks_statistic_sorted(
        sorted, [&](double z) { return density::cdf(z, p); });
    CHECK(ks <= 0.01);
  }
}

TEST_CASE("sparse vector sampler plants an exact support", "[density]") {
  const auto p = density::density_params(0.1, 0.2);

  SECTION("k = round(kappa n) nonzeros, exactly") {
    for (Eigen::Index n : {10, 57, 100, 301}) {
      rng::Stream stream(99, "sparse-vec");
      const Eigen::VectorXd z = density::sample_sparse_vector(n, p, stream);
      REQUIRE(z.size() == n);
      const auto k = static_cast<Eigen::Index>(
          std::llround(0.1 * static_cast<double>(n)));
      Eigen::Index nonzeros = 0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (z[i] != 0.0) {
          ++nonzeros;
          CHECK(std::abs(z[i]) >= p.gap);
        }
      }
      CHECK(nonzeros == k);
    }
  }
  SECTION("support occupancy is uniform") {
    const Eigen::Index n = 100;
    std::vector<int> hits(static_cast<std::size_t>(n), 0);
    const int reps = 3000;
    rng::Stream stream(1234, "occupancy");
    for (int r = 0; r < reps; ++r) {
      const Eigen::VectorXd z = density::sample_sparse_vector(n, p, stream);
      for (Eigen::Index i = 0; i < n; ++i)
        if (z[i] != 0.0) ++hits[static_cast<std::size_t>(i)];
    }
    // each index occupied with probability 0.1; 3000 reps -> SE ~ 0.0055
    for (int h : hits) {
      const double freq = static_cast<double>(h) / reps;
      CHECK(std::abs(freq - 0.1) <= 5.0 * 0.0055);
    }
  }
  SECTION("k = 0 is rejected") {
    rng::Stream stream(5, "tiny");
    CHECK_THROWS_AS(density::sample_sparse_vector(4, p, stream),
                    std::domain_error);
  }
}

TEST_CASE("gap flattening: density over its support becomes more uniform",
          "[density]") {
  // Approaching the boundary at fixed kappa blows up the scale, so over any
  // fixed window past the gap the density flattens: pdf(gap + d) / pdf(gap)
  // = exp(-xi d / scale - d^2 / (2 scale^2)) climbs toward 1. (At fixed
  // multiples of the gap the shape never changes - the law is a truncated
  // Gaussian cut at xi standard deviations for every alpha.)
  const double kappa = 0.1;
  const double as = theory::alpha_star(kappa).alpha_star;
  const double d = 0.5 * density::density_params(kappa, 0.3 * as).gap;
  double prev_ratio = 0.0;
  double prev_gap = 0.0;
  for (double f : {0.3, 0.5, 0.7, 0.9, 0.97}) {
    const auto p = density::density_params(kappa, f * as);
    const double ratio =
        density::pdf(p.gap + d, p) / density::pdf(p.gap * (1.0 + 1e-12), p);
    CHECK(p.gap > prev_gap);
    CHECK(ratio > prev_ratio);
    CHECK(ratio < 1.0);
    prev_ratio = ratio;
    prev_gap = p.gap;
  }
  CHECK(prev_ratio > 0.8);
}
