#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace swn::theory {

inline constexpr double sqrt_2_over_pi = 0.7978845608028653558798921;

/// Upper-tail probability of the standard normal, Q(x) = P(Z >= x).
/// Computed through erfc so the far tail keeps full relative accuracy.
inline double q_function(double x) {
  return 0.5 * std::erfc(x / std::numbers::sqrt2);
}

inline double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

/// Inverse standard normal CDF. Acklam's rational approximation polished by
/// two Halley steps against the erfc-based CDF; relative error ~1e-15.
inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw std::domain_error("normal_quantile: p must be in (0,1)");

  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};

  constexpr double p_low = 0.02425;
  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }

  for (int i = 0; i < 2; ++i) {
    const double cdf = 0.5 * std::erfc(-x / std::numbers::sqrt2);
    const double e = cdf - p;
    const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
    x -= u / (1.0 + 0.5 * x * u);
  }
  return x;
}

/// alpha(xi) = sqrt(2/pi) * Int_xi^inf t^2 exp(-t^2/2) dt, evaluated in the
/// integration-by-parts closed form sqrt(2/pi)*xi*exp(-xi^2/2) + 2 Q(xi).
inline double alpha_of_xi(double xi) {
  if (!(xi >= 0.0))
    throw std::domain_error("alpha_of_xi: xi must be >= 0");
  return sqrt_2_over_pi * xi * std::exp(-0.5 * xi * xi) + 2.0 * q_function(xi);
}

/// kappa(xi) = sqrt(2/pi) * Int_xi^inf exp(-t^2/2) dt = 2 Q(xi).
inline double kappa_of_xi(double xi) {
  if (!(xi >= 0.0))
    throw std::domain_error("kappa_of_xi: xi must be >= 0");
  return 2.0 * q_function(xi);
}

/// A point on the critical curve: measurement ratio alpha, sparsity fraction
/// kappa, the integral limit xi tying them together, and the two threshold
/// readings of the same point.
struct ThresholdPoint {
  double alpha;
  double kappa;
  double xi;
  double kappa_star;
  double alpha_star;
};

namespace detail {

/// Root of f(x) = target for strictly decreasing f on [lo, hi].
/// Bisection localizes, Newton polishes; |dx| tolerance 1e-12.
template <class F, class DF>
double invert_decreasing(F f, DF df, double target, double lo, double hi) {
  if (f(lo) == target) return lo;
  if (f(hi) == target) return hi;
  for (int i = 0; i < 48; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) > target)
      lo = mid;
    else
      hi = mid;
  }
  double x = 0.5 * (lo + hi);
  for (int i = 0; i < 10; ++i) {
    const double g = f(x) - target;
    const double d = df(x);
    if (d == 0.0) break;
    double next = x - g / d;
    if (next < lo || next > hi) next = 0.5 * (lo + hi);
    const double dx = std::abs(next - x);
    x = next;
    if (dx < 1e-13) break;
  }
  return x;
}

inline double d_alpha_d_xi(double xi) {
  return -sqrt_2_over_pi * xi * xi * std::exp(-0.5 * xi * xi);
}

inline double d_kappa_d_xi(double xi) {
  return -2.0 * normal_pdf(xi);
}

inline constexpr double xi_bracket_hi = 40.0;

} // namespace detail

/// Sparsity threshold kappa*_alpha = 2 Q(xi), xi solving alpha(xi) = alpha.
inline ThresholdPoint kappa_star(double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw std::domain_error("kappa_star: alpha must be in (0,1], got " +
                            std::to_string(alpha));
  const double xi = detail::invert_decreasing(
      [](double t) { return alpha_of_xi(t); }, detail::d_alpha_d_xi, alpha, 0.0,
      detail::xi_bracket_hi);
  const double ks = kappa_of_xi(xi);
  return ThresholdPoint{alpha, ks, xi, ks, alpha};
}

/// Measurement threshold alpha*_kappa = alpha(xi), xi solving 2 Q(xi) = kappa.
inline ThresholdPoint alpha_star(double kappa) {
  if (!(kappa > 0.0 && kappa <= 1.0))
    throw std::domain_error("alpha_star: kappa must be in (0,1], got " +
                            std::to_string(kappa));
  const double xi = detail::invert_decreasing(
      [](double t) { return kappa_of_xi(t); }, detail::d_kappa_d_xi, kappa, 0.0,
      detail::xi_bracket_hi);
  const double as = alpha_of_xi(xi);
  return ThresholdPoint{as, kappa, xi, kappa, as};
}

/// Minimal residual energy and optimal-solution norm at an (alpha, kappa)
/// point. Zero energy in the achievable region (kappa >= kappa*_alpha, i.e.
/// alpha <= alpha*_kappa); in the converse region the energy is
/// (alpha - alpha*_kappa)/alpha and the unique minimizer has per-atom squared
/// norm alpha*_kappa/(alpha - alpha*_kappa).
struct ConverseLaw {
  double min_energy;
  double opt_sq_norm; // finite only in the converse region
  double aux_x;       // x = beta(Q - q); equals opt_sq_norm when finite
  bool achievable;
};

inline ConverseLaw min_energy(double alpha, double kappa) {
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw std::domain_error("min_energy: alpha must be in (0,1]");
  if (!(kappa > 0.0 && kappa <= 1.0))
    throw std::domain_error("min_energy: kappa must be in (0,1]");
  const double as = alpha_star(kappa).alpha_star;
  if (alpha > as) {
    const double e = (alpha - as) / alpha;
    const double q = as / (alpha - as);
    return ConverseLaw{e, q, q, false};
  }
  // On the boundary the optimal norm diverges; report it non-finite.
  constexpr double inf = std::numeric_limits<double>::infinity();
  return ConverseLaw{0.0, inf, inf, true};
}

/// Per-entry second moment of w = Dz/sqrt(n) when z carries the limiting
/// minimal-sparsity marginal: alpha/(alpha*_kappa - alpha). Defined strictly
/// inside the achievable region; diverges at the boundary.
inline double second_moment_achievable(double alpha, double kappa) {
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw std::domain_error("second_moment_achievable: alpha must be in (0,1]");
  if (!(kappa > 0.0 && kappa <= 1.0))
    throw std::domain_error("second_moment_achievable: kappa must be in (0,1]");
  const double as = alpha_star(kappa).alpha_star;
  if (!(alpha < as))
    throw std::domain_error(
        "second_moment_achievable: requires alpha < alpha_star(kappa)");
  return alpha / (as - alpha);
}

} // namespace swn::theory
