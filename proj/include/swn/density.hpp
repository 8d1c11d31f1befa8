#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "swn/rng.hpp"
#include "swn/theory.hpp"

namespace swn::density {

/// Parameters of the marginal law of a non-zero entry of the minimal-l2-norm
/// kappa-sparse WGN representation: a symmetric Gaussian of variance scale_sq
/// with the central band |zeta| < gap carrying no mass. Defined strictly
/// inside the achievable region (alpha < alpha*_kappa).
struct MarginalDensity {
  double kappa;
  double alpha;
  double xi;       // solves 2 Q(xi) = kappa
  double scale_sq; // sigma^2 = alpha / (alpha* (alpha* - alpha))
  double gap;      // xi * sigma
  double alpha_star;

  double scale() const { return std::sqrt(scale_sq); }
};

inline MarginalDensity density_params(double kappa, double alpha) {
  if (!(kappa > 0.0 && kappa < 1.0))
    throw std::domain_error("density_params: kappa must be in (0,1)");
  if (!(alpha > 0.0))
    throw std::domain_error("density_params: alpha must be positive");
  const theory::ThresholdPoint tp = theory::alpha_star(kappa);
  if (!(alpha < tp.alpha_star))
    throw std::domain_error(
        "density_params: requires alpha < alpha_star(kappa); the gap diverges "
        "at the boundary");
  const double scale_sq = alpha / (tp.alpha_star * (tp.alpha_star - alpha));
  const double sigma = std::sqrt(scale_sq);
  return MarginalDensity{kappa, alpha, tp.xi, scale_sq, tp.xi * sigma,
                         tp.alpha_star};
}

/// p(zeta): zero inside the gap, (1/(kappa*sigma)) * phi(zeta/sigma) outside.
inline double pdf(double zeta, const MarginalDensity& params) {
  if (std::abs(zeta) < params.gap) return 0.0;
  const double sigma = params.scale();
  return theory::normal_pdf(zeta / sigma) / (params.kappa * sigma);
}

/// Analytic CDF of the same law (used by quantile checks and KS tests).
inline double cdf(double zeta, const MarginalDensity& params) {
  const double sigma = params.scale();
  if (zeta <= -params.gap)
    return theory::q_function(-zeta / sigma) / params.kappa;
  if (zeta < params.gap) return 0.5;
  return 1.0 - theory::q_function(zeta / sigma) / params.kappa;
}

/// One exact draw: uniform sign, magnitude sigma * z with z the standard
/// normal conditioned on z >= xi, realized by inverse-CDF tail mapping.
/// Every sample satisfies |zeta| >= gap.
inline double sample_nonzero(const MarginalDensity& params, rng::Stream& rng) {
  const double sign = (rng.next_u64() & 1ull) ? 1.0 : -1.0;
  const double u = rng.uniform_open01(); // (0,1], u=1 lands exactly on xi
  const double p = u * theory::q_function(params.xi);
  double z = -theory::normal_quantile(p);
  if (z < params.xi) z = params.xi; // guard one-ulp quantile round-off
  return sign * params.scale() * z;
}

/// A length-n vector with exactly round(kappa*n) non-zero entries on a
/// uniformly random support, values i.i.d. from sample_nonzero.
inline Eigen::VectorXd sample_sparse_vector(Eigen::Index n,
                                            const MarginalDensity& params,
                                            rng::Stream& rng) {
  if (n < 1) throw std::domain_error("sample_sparse_vector: n must be >= 1");
  const auto k = static_cast<Eigen::Index>(std::llround(params.kappa * static_cast<double>(n)));
  if (k < 1)
    throw std::domain_error(
        "sample_sparse_vector: round(kappa*n) is zero; no non-zero entries");

  // Partial Fisher-Yates: the first k slots become the support.
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto j = i + static_cast<Eigen::Index>(
                           rng.uniform_below(static_cast<std::uint64_t>(n - i)));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }

  Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < k; ++i)
    z[idx[static_cast<std::size_t>(i)]] = sample_nonzero(params, rng);
  return z;
}

} // namespace swn::density
