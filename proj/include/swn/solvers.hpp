#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "swn/ensembles.hpp"
#include "swn/rng.hpp"

namespace swn::solvers {

/// Residual energy (1/m) || (1/sqrt(n)) D z - omega ||^2.
inline double energy(const Eigen::VectorXd& z,
                     const ensembles::ProblemInstance& inst) {
  if (z.size() != inst.n)
    throw std::invalid_argument("energy: z length must match atom count");
  const Eigen::VectorXd r =
      inst.dictionary * z / std::sqrt(static_cast<double>(inst.n)) - inst.omega;
  return r.squaredNorm() / static_cast<double>(inst.m);
}

/// Result of a weighted minimum-norm solve. `ok` is false when the Gram
/// matrix D W D^T is numerically near-singular or the returned z fails to
/// reproduce omega; failure is data, not a crash.
struct MinNormResult {
  Eigen::VectorXd z;
  bool ok = false;
  double rcond = 0.0;
  double rel_residual = 0.0; // energy(z) / energy of omega itself
};

inline constexpr double gram_rcond_floor = 1e-14;
/// A solve only counts as exact when it reproduces omega to this relative
/// residual energy. Well-conditioned solves land many orders below it; a
/// rank-deficient Gram matrix (which LDLT may "solve" without complaint)
/// lands many orders above it.
inline constexpr double min_norm_exactness = 1e-8;

/// Weighted minimum-norm solution of the underdetermined system
/// (1/sqrt(n)) D z = omega:  z = W D^T (D W D^T)^{-1} sqrt(n) omega,
/// the minimizer of sum_i z_i^2 / w_i over exact representations.
inline MinNormResult min_norm_solution(const ensembles::ProblemInstance& inst,
                                       const Eigen::VectorXd& weights) {
  if (weights.size() != inst.n)
    throw std::invalid_argument("min_norm_solution: weights length mismatch");
  if (inst.m > inst.n)
    throw std::invalid_argument("min_norm_solution: requires m <= n");
  if ((weights.array() <= 0.0).any())
    throw std::invalid_argument("min_norm_solution: weights must be positive");

  const Eigen::MatrixXd weighted = inst.dictionary * weights.asDiagonal();
  const Eigen::MatrixXd gram = weighted * inst.dictionary.transpose();
  Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);

  MinNormResult res;
  res.rcond = ldlt.rcond();
  if (ldlt.info() != Eigen::Success || !std::isfinite(res.rcond) ||
      res.rcond < gram_rcond_floor) {
    res.z = Eigen::VectorXd::Zero(inst.n);
    return res;
  }
  const Eigen::VectorXd y =
      ldlt.solve(std::sqrt(static_cast<double>(inst.n)) * inst.omega);
  res.z = weights.asDiagonal() * (inst.dictionary.transpose() * y);

  // LDLT happily returns a least-squares-like vector for singular Gram
  // matrices, so exactness has to be verified, not assumed.
  const double omega_energy =
      inst.omega.squaredNorm() / static_cast<double>(inst.m);
  const double res_energy = energy(res.z, inst);
  res.rel_residual = omega_energy > 0.0
                         ? res_energy / omega_energy
                         : (res_energy > 0.0
                                ? std::numeric_limits<double>::infinity()
                                : 0.0);
  if (!std::isfinite(res.rel_residual) ||
      res.rel_residual > min_norm_exactness) {
    res.z = Eigen::VectorXd::Zero(inst.n);
    return res;
  }
  res.ok = true;
  return res;
}

/// IRLS configuration. Stages pair a p-exponent with a regularizer value:
/// stage s runs p = p_schedule[min(s, len-1)], eps = epsilon_init /
/// epsilon_decay^s, and the continuation stops after eps reaches
/// epsilon_min. Within a stage, weights w_i = (z_i^2 + eps)^(1 - p/2) feed
/// the minimum-norm solve until the iterate change falls below
/// convergence_tol.
///
/// The continuation always lands on a dense exact representation, so the
/// minimal support is read off with an energy rule rather than a magnitude
/// rule: the support is the smallest set of atoms whose least-squares
/// residual energy stays within energy_tol (relative to the energy of omega
/// itself), seeded from the magnitude ranking of the iterate and refined by
/// local search. `restarts` reruns the continuation from random initial
/// weights, `polish_kicks` perturbs the support search out of local minima;
/// both draw from deterministic streams under solver_seed, so results do not
/// depend on scheduling. zero_tol is relative to max|z_i| and defines which
/// entries of the returned (debiased) iterate count as nonzero.
struct IrlsParams {
  std::vector<double> p_schedule{1.0, 0.5, 0.1};
  double epsilon_init = 1.0;
  double epsilon_decay = 10.0;
  double epsilon_min = 1e-5;
  int max_iters = 100;
  double convergence_tol = 1e-8;
  double zero_tol = 1e-6;
  double energy_tol = 0.18;
  int restarts = 6;
  int polish_kicks = 10;
  std::uint64_t solver_seed = 0x73776e31ull;

  void validate() const {
    if (p_schedule.empty())
      throw std::domain_error("IrlsParams: p_schedule must be non-empty");
    for (double p : p_schedule)
      if (!(p > 0.0 && p <= 2.0))
        throw std::domain_error("IrlsParams: p values must be in (0,2]");
    if (!(epsilon_init > 0.0) || !(epsilon_min > 0.0) ||
        epsilon_min > epsilon_init)
      throw std::domain_error(
          "IrlsParams: need 0 < epsilon_min <= epsilon_init");
    if (!(epsilon_decay > 1.0))
      throw std::domain_error("IrlsParams: epsilon_decay must exceed 1");
    if (max_iters < 1) throw std::domain_error("IrlsParams: max_iters >= 1");
    if (!(convergence_tol > 0.0) || !(zero_tol > 0.0))
      throw std::domain_error("IrlsParams: tolerances must be positive");
    if (!(energy_tol > 0.0 && energy_tol < 1.0))
      throw std::domain_error("IrlsParams: energy_tol must lie in (0,1)");
    if (restarts < 1) throw std::domain_error("IrlsParams: restarts >= 1");
    if (polish_kicks < 0)
      throw std::domain_error("IrlsParams: polish_kicks >= 0");
  }
};

struct SparseSolution {
  Eigen::VectorXd z;           // least-squares fit on the support, 0 elsewhere
  std::vector<Eigen::Index> support; // ascending
  double sparsity_fraction = 0.0;
  double energy = 0.0;         // residual energy of z (within energy_tol)
  int iterations = 0;          // weighted solves summed over all restarts
  bool converged = false;      // some restart's final stage reached fixpoint
  bool failed = false;         // no restart produced a usable support
};

namespace detail {

inline std::vector<Eigen::Index> support_above(const Eigen::VectorXd& z,
                                               double rel_tol) {
  std::vector<Eigen::Index> s;
  const double cutoff = rel_tol * z.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < z.size(); ++i)
    if (std::abs(z[i]) > cutoff) s.push_back(i);
  return s;
}

inline std::vector<Eigen::Index> magnitude_order(const Eigen::VectorXd& z) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(z.size()));
  for (Eigen::Index i = 0; i < z.size(); ++i)
    order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) {
                     return std::abs(z[a]) > std::abs(z[b]);
                   });
  return order;
}

struct SupportFit {
  double energy = 0.0;
  Eigen::VectorXd coeffs; // one per support entry, in support order
};

/// Least squares of omega on the given atoms; energy from the explicit
/// residual so near-exact fits are not lost to cancellation.
inline SupportFit fit_support(const Eigen::MatrixXd& atoms,
                              const Eigen::VectorXd& omega,
                              const std::vector<Eigen::Index>& support) {
  const Eigen::Index m = atoms.rows();
  const auto k = static_cast<Eigen::Index>(support.size());
  SupportFit fit;
  if (k == 0) {
    fit.energy = omega.squaredNorm() / static_cast<double>(m);
    fit.coeffs = Eigen::VectorXd(0);
    return fit;
  }
  Eigen::MatrixXd sub(m, k);
  for (Eigen::Index j = 0; j < k; ++j)
    sub.col(j) = atoms.col(support[static_cast<std::size_t>(j)]);
  fit.coeffs = sub.householderQr().solve(omega);
  fit.energy =
      (sub * fit.coeffs - omega).squaredNorm() / static_cast<double>(m);
  return fit;
}

/// Smallest prefix of `order` whose least-squares residual energy drops to
/// `tol` or below (modified Gram-Schmidt; near-dependent atoms are skipped
/// since they cannot reduce the residual). Returns false when no prefix
/// reaches the tolerance.
inline bool prefix_to_tolerance(const Eigen::MatrixXd& atoms,
                                const Eigen::VectorXd& omega,
                                const std::vector<Eigen::Index>& order,
                                double tol,
                                std::vector<Eigen::Index>& support) {
  const Eigen::Index m = atoms.rows();
  support.clear();
  Eigen::MatrixXd q(m, std::min<Eigen::Index>(m, atoms.cols()));
  Eigen::Index k = 0;
  Eigen::VectorXd r = omega;
  double e = r.squaredNorm() / static_cast<double>(m);
  if (e <= tol) return true;
  for (Eigen::Index idx : order) {
    Eigen::VectorXd v = atoms.col(idx);
    const double norm_in = v.norm();
    v -= q.leftCols(k) * (q.leftCols(k).transpose() * v);
    v -= q.leftCols(k) * (q.leftCols(k).transpose() * v);
    if (!(v.norm() > 1e-10 * norm_in)) continue;
    q.col(k) = v / v.norm();
    r -= q.col(k) * q.col(k).dot(r);
    support.push_back(idx);
    ++k;
    e = r.squaredNorm() / static_cast<double>(m);
    if (e <= tol) return true;
    if (k == q.cols()) break;
  }
  return false;
}

inline constexpr int exchange_move_cap = 400;

/// Steepest single-swap descent on the residual energy at fixed support
/// size. Per pass: one thin QR of the support atoms, then every
/// (drop i, add j) pair is scored in closed form from that factorization.
/// Modifies `support` in place and returns the final (refit) energy.
inline double exchange_fixpoint(const Eigen::MatrixXd& atoms,
                                const Eigen::VectorXd& omega,
                                std::vector<Eigen::Index>& support) {
  const Eigen::Index m = atoms.rows();
  const Eigen::Index n = atoms.cols();
  const auto md = static_cast<double>(m);
  if (support.empty()) return omega.squaredNorm() / md;

  const Eigen::VectorXd col_sq = atoms.colwise().squaredNorm().transpose();
  double e_cur = 0.0;
  for (int move = 0; move < exchange_move_cap; ++move) {
    const auto k = static_cast<Eigen::Index>(support.size());
    Eigen::MatrixXd sub(m, k);
    for (Eigen::Index j = 0; j < k; ++j)
      sub.col(j) = atoms.col(support[static_cast<std::size_t>(j)]);

    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(sub);
    const Eigen::MatrixXd thin_q =
        qr.householderQ() * Eigen::MatrixXd::Identity(m, k);
    const Eigen::MatrixXd r_factor =
        qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    const Eigen::VectorXd qt_omega = thin_q.transpose() * omega;
    const Eigen::VectorXd beta =
        r_factor.triangularView<Eigen::Upper>().solve(qt_omega);
    const Eigen::VectorXd resid = omega - thin_q * qt_omega;
    e_cur = resid.squaredNorm() / md;

    const Eigen::MatrixXd b = thin_q.transpose() * atoms; // k x n
    const Eigen::VectorXd c = atoms.transpose() * resid;  // n
    const Eigen::VectorXd perp_sq =
        (col_sq - b.colwise().squaredNorm().transpose()).cwiseMax(0.0);
    std::vector<char> in_support(static_cast<std::size_t>(n), 0);
    for (Eigen::Index idx : support)
      in_support[static_cast<std::size_t>(idx)] = 1;

    double best_e = e_cur;
    Eigen::Index best_i = -1, best_j = -1;
    for (Eigen::Index i = 0; i < k; ++i) {
      // t = R^{-T} e_i gives the dropped direction: ||t||^2 = [G^{-1}]_ii,
      // and the residual after dropping atom i is resid + gamma * Q t.
      Eigen::VectorXd t = Eigen::VectorXd::Unit(k, i);
      r_factor.transpose().triangularView<Eigen::Lower>().solveInPlace(t);
      const double t_sq = t.squaredNorm();
      if (!(t_sq > 1e-30) || !std::isfinite(t_sq)) continue;
      const double gamma = beta[i] / t_sq;
      const double e_dropped = e_cur + beta[i] * beta[i] / (t_sq * md);
      const Eigen::VectorXd tb = b.transpose() * t; // n
      for (Eigen::Index j = 0; j < n; ++j) {
        if (in_support[static_cast<std::size_t>(j)]) continue;
        const double denom = perp_sq[j] + tb[j] * tb[j] / t_sq;
        if (!(denom > 1e-18)) continue;
        const double numer = c[j] + gamma * tb[j];
        const double e_new = e_dropped - numer * numer / (denom * md);
        if (e_new < best_e) {
          best_e = e_new;
          best_i = i;
          best_j = j;
        }
      }
    }
    if (best_i < 0 || best_e >= e_cur - 1e-12 * (1.0 + e_cur)) break;
    support[static_cast<std::size_t>(best_i)] = best_j;
  }
  return fit_support(atoms, omega, support).energy;
}

/// Drops atoms one at a time (cheapest first, by the exact
/// delete-one-variable residual increase) while the energy stays within
/// `tol`. Returns the final energy.
inline double shrink_support(const Eigen::MatrixXd& atoms,
                             const Eigen::VectorXd& omega,
                             std::vector<Eigen::Index>& support, double tol) {
  const Eigen::Index m = atoms.rows();
  const auto md = static_cast<double>(m);
  double e_cur = fit_support(atoms, omega, support).energy;
  while (!support.empty()) {
    const auto k = static_cast<Eigen::Index>(support.size());
    Eigen::MatrixXd sub(m, k);
    for (Eigen::Index j = 0; j < k; ++j)
      sub.col(j) = atoms.col(support[static_cast<std::size_t>(j)]);
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(sub);
    const Eigen::MatrixXd r_factor =
        qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    const Eigen::VectorXd beta =
        r_factor.triangularView<Eigen::Upper>().solve(
            (qr.householderQ() * Eigen::MatrixXd::Identity(m, k)).transpose() *
            omega);

    double best_delta = std::numeric_limits<double>::infinity();
    Eigen::Index best_i = -1;
    for (Eigen::Index i = 0; i < k; ++i) {
      Eigen::VectorXd t = Eigen::VectorXd::Unit(k, i);
      r_factor.transpose().triangularView<Eigen::Lower>().solveInPlace(t);
      const double t_sq = t.squaredNorm();
      if (!(t_sq > 1e-30) || !std::isfinite(t_sq)) continue;
      const double delta = beta[i] * beta[i] / (t_sq * md);
      if (delta < best_delta) {
        best_delta = delta;
        best_i = i;
      }
    }
    if (best_i < 0 || !(e_cur + best_delta <= tol)) break;
    support.erase(support.begin() + best_i);
    e_cur = fit_support(atoms, omega, support).energy;
    if (!(e_cur <= tol)) break; // numerical safety; formula said it fits
  }
  return e_cur;
}

/// Index of the atom whose removal raises the residual the least, or -1.
inline Eigen::Index cheapest_drop(const Eigen::MatrixXd& atoms,
                                  const Eigen::VectorXd& omega,
                                  const std::vector<Eigen::Index>& support) {
  const Eigen::Index m = atoms.rows();
  const auto k = static_cast<Eigen::Index>(support.size());
  if (k == 0) return -1;
  Eigen::MatrixXd sub(m, k);
  for (Eigen::Index j = 0; j < k; ++j)
    sub.col(j) = atoms.col(support[static_cast<std::size_t>(j)]);
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(sub);
  const Eigen::MatrixXd r_factor =
      qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  const Eigen::VectorXd beta =
      r_factor.triangularView<Eigen::Upper>().solve(
          (qr.householderQ() * Eigen::MatrixXd::Identity(m, k)).transpose() *
          omega);
  double best_delta = std::numeric_limits<double>::infinity();
  Eigen::Index best_i = -1;
  for (Eigen::Index i = 0; i < k; ++i) {
    Eigen::VectorXd t = Eigen::VectorXd::Unit(k, i);
    r_factor.transpose().triangularView<Eigen::Lower>().solveInPlace(t);
    const double t_sq = t.squaredNorm();
    if (!(t_sq > 1e-30) || !std::isfinite(t_sq)) continue;
    const double delta = beta[i] * beta[i] / t_sq;
    if (delta < best_delta) {
      best_delta = delta;
      best_i = i;
    }
  }
  return best_i;
}

/// Swap-descend, drop atoms while the tolerance allows, then keep forcing
/// out the cheapest atom and letting the swap descent repair the excess;
/// stop when a forced drop cannot be repaired back under the tolerance.
/// Returns false when the support cannot be brought within the tolerance.
inline bool polish_support(const Eigen::MatrixXd& atoms,
                           const Eigen::VectorXd& omega,
                           std::vector<Eigen::Index>& support, double tol,
                           double& energy_out) {
  double e = exchange_fixpoint(atoms, omega, support);
  if (!(e <= tol)) {
    energy_out = e;
    return false;
  }
  for (;;) {
    e = shrink_support(atoms, omega, support, tol);
    const Eigen::Index victim = cheapest_drop(atoms, omega, support);
    if (victim < 0) break;
    std::vector<Eigen::Index> smaller = support;
    smaller.erase(smaller.begin() + victim);
    const double e_small = exchange_fixpoint(atoms, omega, smaller);
    if (!(e_small <= tol)) break;
    support = std::move(smaller);
    e = e_small;
  }
  energy_out = e;
  return true;
}

/// (size, energy, lexicographic support) strict ordering for keeping the
/// best candidate.
inline bool support_better(const std::vector<Eigen::Index>& s_new, double e_new,
                           const std::vector<Eigen::Index>& s_old,
                           double e_old) {
  if (s_new.size() != s_old.size()) return s_new.size() < s_old.size();
  if (e_new != e_old) return e_new < e_old;
  std::vector<Eigen::Index> a = s_new, b = s_old;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  return a < b;
}

struct ContinuationOutcome {
  Eigen::VectorXd z;
  int iterations = 0;
  bool converged = false; // final stage reached its fixed point
  bool usable = false;    // at least one weighted solve succeeded
};

/// One IRLS continuation run: the first solve uses `w0` as weights, later
/// iterations reweight from the iterate. A mid-run Gram breakdown ends the
/// run; the last good iterate (if any) is still returned for extraction.
inline ContinuationOutcome run_continuation(
    const ensembles::ProblemInstance& inst, const IrlsParams& params,
    const Eigen::VectorXd& w0) {
  ContinuationOutcome out;
  out.z = Eigen::VectorXd::Zero(inst.n);
  Eigen::VectorXd z = Eigen::VectorXd::Zero(inst.n);
  bool have_z = false;
  bool broke = false;

  for (int stage = 0;; ++stage) {
    const double raw_eps =
        params.epsilon_init / std::pow(params.epsilon_decay, stage);
    const double eps = std::max(raw_eps, params.epsilon_min);
    const double p = params.p_schedule[std::min<std::size_t>(
        static_cast<std::size_t>(stage), params.p_schedule.size() - 1)];
    const double expo = 1.0 - 0.5 * p;

    bool stage_converged = false;
    for (int it = 0; it < params.max_iters; ++it) {
      Eigen::VectorXd weights;
      if (have_z)
        weights = ((z.array().square() + eps).pow(expo)).matrix();
      else
        weights = w0;
      const MinNormResult step = min_norm_solution(inst, weights);
      if (!step.ok) {
        broke = true;
        break;
      }
      const double delta = (step.z - z).norm() / std::max(1.0, z.norm());
      z = step.z;
      have_z = true;
      ++out.iterations;
      if (delta < params.convergence_tol) {
        stage_converged = true;
        break;
      }
    }
    if (broke) break;
    if (raw_eps <= params.epsilon_min) {
      out.converged = stage_converged;
      break;
    }
  }

  out.usable = have_z;
  if (have_z) out.z = z;
  return out;
}

} // namespace detail

/// Approximate l0 minimization. Runs the IRLS continuation from several
/// starts, reads a candidate support off each final iterate's magnitude
/// ranking (smallest prefix within energy_tol), tightens it by drop/swap
/// local search with random kicks, and keeps the best (size, energy) support
/// found. The returned z is the least-squares fit on that support — exact
/// zeros elsewhere — so its sparsity is structural and its energy is
/// recomputable from z alone.
inline SparseSolution irls_min_l0(const ensembles::ProblemInstance& inst,
                                  const IrlsParams& params = {}) {
  params.validate();
  SparseSolution sol;
  sol.z = Eigen::VectorXd::Zero(inst.n);

  const double base_energy =
      inst.omega.squaredNorm() / static_cast<double>(inst.m);
  if (!(base_energy > 0.0)) { // omega == 0: the empty support is exact
    sol.converged = true;
    return sol;
  }
  const double tol = params.energy_tol * base_energy;
  const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(inst.n));
  const Eigen::MatrixXd atoms = inst.dictionary * inv_sqrt_n;

  std::vector<Eigen::Index> best_support;
  double best_energy = 0.0;
  bool have_best = false;
  bool any_converged = false;

  for (int r = 0; r < params.restarts; ++r) {
    rng::Stream stream(params.solver_seed,
                       "irls/restart=" + std::to_string(r));
    Eigen::VectorXd w0 = Eigen::VectorXd::Ones(inst.n);
    if (r > 0)
      for (Eigen::Index i = 0; i < inst.n; ++i)
        w0[i] = -std::log(stream.uniform_open01());

    const detail::ContinuationOutcome cont =
        detail::run_continuation(inst, params, w0);
    sol.iterations += cont.iterations;
    if (!cont.usable) continue;
    any_converged = any_converged || cont.converged;

    std::vector<Eigen::Index> support;
    if (!detail::prefix_to_tolerance(atoms, inst.omega,
                                     detail::magnitude_order(cont.z), tol,
                                     support))
      continue;
    double e = 0.0;
    if (!detail::polish_support(atoms, inst.omega, support, tol, e)) continue;

    // iterated local search: random single-atom replacements, re-polished
    if (!support.empty() && static_cast<Eigen::Index>(support.size()) < inst.n) {
      for (int kick = 0; kick < params.polish_kicks; ++kick) {
        std::vector<Eigen::Index> cand = support;
        const auto pos = static_cast<std::size_t>(
            stream.uniform_below(cand.size()));
        std::vector<char> used(static_cast<std::size_t>(inst.n), 0);
        for (Eigen::Index idx : cand) used[static_cast<std::size_t>(idx)] = 1;
        Eigen::Index j;
        do {
          j = static_cast<Eigen::Index>(
              stream.uniform_below(static_cast<std::uint64_t>(inst.n)));
        } while (used[static_cast<std::size_t>(j)]);
        cand[pos] = j;
        double e_cand = 0.0;
        if (!detail::polish_support(atoms, inst.omega, cand, tol, e_cand))
          continue;
        if (detail::support_better(cand, e_cand, support, e)) {
          support = std::move(cand);
          e = e_cand;
        }
      }
    }

    if (!have_best || detail::support_better(support, e, best_support,
                                             best_energy)) {
      best_support = std::move(support);
      best_energy = e;
      have_best = true;
    }
  }

  if (!have_best) {
    sol.failed = true;
    sol.energy = base_energy;
    return sol;
  }

  std::sort(best_support.begin(), best_support.end());
  const detail::SupportFit fit =
      detail::fit_support(atoms, inst.omega, best_support);
  for (std::size_t j = 0; j < best_support.size(); ++j)
    sol.z[best_support[j]] = fit.coeffs[static_cast<Eigen::Index>(j)];
  // enforce the declared zero rule on the output itself
  if (!best_support.empty()) {
    const double cutoff = params.zero_tol * sol.z.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < sol.z.size(); ++i)
      if (std::abs(sol.z[i]) <= cutoff) sol.z[i] = 0.0;
  }
  sol.support = detail::support_above(sol.z, params.zero_tol);
  sol.sparsity_fraction =
      static_cast<double>(sol.support.size()) / static_cast<double>(inst.n);
  sol.energy = energy(sol.z, inst);
  sol.converged = any_converged;
  return sol;
}

struct BruteForceResult {
  std::vector<Eigen::Index> support; // ascending; lexicographically smallest on ties
  double energy = 0.0;
  Eigen::VectorXd coeffs; // representation values on the support
};

namespace detail {

inline double binomial_guarded(Eigen::Index n, Eigen::Index k, double cap) {
  double c = 1.0;
  for (Eigen::Index i = 0; i < k; ++i) {
    c *= static_cast<double>(n - i) / static_cast<double>(i + 1);
    if (c > cap) return c;
  }
  return c;
}

} // namespace detail

/// Exhaustive best-k-support search: the exact minimal-residual oracle at
/// desk scale. Enumerates every k-subset in lexicographic order and keeps the
/// first global minimizer.
inline BruteForceResult brute_force_best_ksupport(
    const ensembles::ProblemInstance& inst, Eigen::Index k) {
  constexpr double subset_cap = 1e6;
  if (k < 0 || k > inst.n)
    throw std::domain_error("brute_force_best_ksupport: k out of range");
  if (inst.n > 24)
    throw std::domain_error("brute_force_best_ksupport: n must be <= 24");
  if (detail::binomial_guarded(inst.n, k, subset_cap) > subset_cap)
    throw std::domain_error(
        "brute_force_best_ksupport: combinatorial budget exceeded");

  const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(inst.n));
  const Eigen::MatrixXd atoms = inst.dictionary * inv_sqrt_n;

  BruteForceResult best;
  best.energy = inst.omega.squaredNorm() / static_cast<double>(inst.m);
  best.coeffs = Eigen::VectorXd(0);
  if (k == 0) return best;

  std::vector<Eigen::Index> subset(static_cast<std::size_t>(k));
  for (Eigen::Index i = 0; i < k; ++i) subset[static_cast<std::size_t>(i)] = i;

  Eigen::MatrixXd sub(inst.m, k);
  bool have_best = false;
  while (true) {
    for (Eigen::Index j = 0; j < k; ++j)
      sub.col(j) = atoms.col(subset[static_cast<std::size_t>(j)]);

    // Normal equations, then an explicit residual so near-exact fits are not
    // lost to cancellation.
    const Eigen::MatrixXd gram = sub.transpose() * sub;
    const Eigen::VectorXd rhs = sub.transpose() * inst.omega;
    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    Eigen::VectorXd c;
    if (llt.info() == Eigen::Success) {
      c = llt.solve(rhs);
    } else {
      c = sub.colPivHouseholderQr().solve(inst.omega);
    }
    const double e =
        (sub * c - inst.omega).squaredNorm() / static_cast<double>(inst.m);
    if (!have_best || e < best.energy) {
      have_best = true;
      best.energy = e;
      best.support = subset;
      best.coeffs = c;
    }

    // next lexicographic combination
    Eigen::Index pos = k - 1;
    while (pos >= 0 &&
           subset[static_cast<std::size_t>(pos)] == inst.n - k + pos)
      --pos;
    if (pos < 0) break;
    ++subset[static_cast<std::size_t>(pos)];
    for (Eigen::Index j = pos + 1; j < k; ++j)
      subset[static_cast<std::size_t>(j)] =
          subset[static_cast<std::size_t>(j - 1)] + 1;
  }
  return best;
}

struct LsResult {
  Eigen::VectorXd x_hat;
  bool ok = false;
  double rcond = 0.0;
};

/// Least-squares reconstruction on a known support:
/// x_hat = sqrt(m/snr) (D0^T D0)^{-1} D0^T y on the support, 0 elsewhere.
inline LsResult ls_on_support(const Eigen::VectorXd& y,
                              const Eigen::MatrixXd& dictionary,
                              const std::vector<Eigen::Index>& support,
                              double snr) {
  const Eigen::Index m = dictionary.rows();
  const Eigen::Index n = dictionary.cols();
  const auto k0 = static_cast<Eigen::Index>(support.size());
  if (y.size() != m)
    throw std::invalid_argument("ls_on_support: y length must equal m");
  if (!(snr > 0.0)) throw std::domain_error("ls_on_support: snr must be > 0");
  if (k0 >= m)
    throw std::domain_error("ls_on_support: support size must be < m");
  for (Eigen::Index idx : support)
    if (idx < 0 || idx >= n)
      throw std::invalid_argument("ls_on_support: support index out of range");

  Eigen::MatrixXd sub(m, k0);
  for (Eigen::Index j = 0; j < k0; ++j)
    sub.col(j) = dictionary.col(support[static_cast<std::size_t>(j)]);

  LsResult res;
  res.x_hat = Eigen::VectorXd::Zero(n);
  if (k0 == 0) {
    res.ok = true;
    res.rcond = 1.0;
    return res;
  }

  const Eigen::MatrixXd gram = sub.transpose() * sub;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  res.rcond = ldlt.rcond();
  if (ldlt.info() != Eigen::Success || !std::isfinite(res.rcond) ||
      res.rcond < gram_rcond_floor)
    return res;

  const Eigen::VectorXd coeffs =
      std::sqrt(static_cast<double>(m) / snr) * ldlt.solve(sub.transpose() * y);
  for (Eigen::Index j = 0; j < k0; ++j)
    res.x_hat[support[static_cast<std::size_t>(j)]] = coeffs[j];
  res.ok = true;
  return res;
}

} // namespace swn::solvers
