#pragma once

// Test-side oracles kept deliberately independent of the library: adaptive
// quadrature of the defining integrals, a long-double tail probability, and
// the Wishart inverse-trace expectation.

#include <cmath>
#include <stdexcept>

namespace oracle {

namespace detail {

inline double simpson(double a, double b, double fa, double fm, double fb) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

template <class F>
double adaptive_step(F&& f, double a, double fa, double b, double fb, double m,
                     double fm, double whole, double tol, int depth) {
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = simpson(a, m, fa, flm, fm);
  const double right = simpson(m, b, fm, frm, fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return adaptive_step(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
         adaptive_step(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

} // namespace detail

/// Adaptive Simpson quadrature of f over [a, b].
template <class F>
double integrate(F&& f, double a, double b, double tol = 1e-13) {
  if (!(b >= a)) throw std::invalid_argument("integrate: bad interval");
  if (a == b) return 0.0;
  const double m = 0.5 * (a + b);
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(m);
  const double whole = detail::simpson(a, b, fa, fm, fb);
  return detail::adaptive_step(f, a, fa, b, fb, m, fm, whole, tol, 48);
}

/// Upper-tail standard normal probability via long-double erfc.
inline double q_tail(double x) {
  return static_cast<double>(
      0.5L * erfcl(static_cast<long double>(x) / 1.41421356237309504880169L));
}

/// Defining threshold integral sqrt(2/pi) * int_xi^inf t^2 e^{-t^2/2} dt,
/// evaluated by quadrature on a finite window (the tail beyond xi+45 is far
/// below double precision).
inline double alpha_integral(double xi) {
  const double hi = xi + 45.0;
  const double c = std::sqrt(2.0 / 3.14159265358979323846);
  return c * integrate(
                 [](double t) { return t * t * std::exp(-0.5 * t * t); }, xi,
                 hi);
}

/// Inverts 2 Q(xi) = kappa by bisection on the long-double tail.
inline double xi_of_kappa(double kappa) {
  double lo = 0.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (2.0 * q_tail(mid) > kappa) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// Measurement threshold at sparsity kappa, fully via quadrature/bisection.
inline double alpha_star_oracle(double kappa) {
  return alpha_integral(xi_of_kappa(kappa));
}

/// E tr(W^-1) for W ~ Wishart(m, I_k), m > k + 1.
inline double wishart_inv_trace(int m, int k) {
  return static_cast<double>(k) / static_cast<double>(m - k - 1);
}

} // namespace oracle
