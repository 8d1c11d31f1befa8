#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "swn/density.hpp"
#include "swn/ensembles.hpp"
#include "swn/rng.hpp"
#include "swn/solvers.hpp"
#include "swn/stats.hpp"
#include "swn/theory.hpp"

namespace swn::experiments {

namespace detail {

inline unsigned resolve_jobs(int jobs) {
  if (jobs > 0) return static_cast<unsigned>(jobs);
  const unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? hc : 1;
}

/// Runs fn(0..count-1) on `jobs` workers (0 = machine parallelism). Tasks
/// write to preallocated slots keyed by index, so the schedule never affects
/// results; the caller reduces the slots in index order afterwards.
template <class Fn>
void parallel_for(std::size_t count, int jobs, Fn&& fn) {
  std::size_t workers = resolve_jobs(jobs);
  if (workers > count) workers = count;
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::mutex error_mutex;
  std::exception_ptr first_error;

  auto body = [&]() {
    while (!abort.load(std::memory_order_relaxed)) {
      const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= count) break;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        abort.store(true, std::memory_order_relaxed);
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t t = 0; t + 1 < workers; ++t) pool.emplace_back(body);
  body();
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

/// First k entries of a partial Fisher-Yates shuffle of `items`, returned
/// sorted ascending.
inline std::vector<Eigen::Index> sample_subset(std::vector<Eigen::Index> items,
                                               std::size_t k,
                                               rng::Stream& stream) {
  if (k > items.size())
    throw std::invalid_argument("sample_subset: k exceeds population");
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j =
        i + static_cast<std::size_t>(stream.uniform_below(items.size() - i));
    std::swap(items[i], items[j]);
  }
  items.resize(k);
  std::sort(items.begin(), items.end());
  return items;
}

inline Eigen::Index rounded_m(double alpha, Eigen::Index n) {
  return static_cast<Eigen::Index>(std::llround(alpha * static_cast<double>(n)));
}

inline std::vector<double> collect_used(const std::vector<double>& slots,
                                        std::size_t begin, std::size_t end) {
  std::vector<double> used;
  used.reserve(end - begin);
  for (std::size_t i = begin; i < end; ++i)
    if (!std::isnan(slots[i])) used.push_back(slots[i]);
  return used;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Quadratic least squares (finite-size extrapolation backend)
// ---------------------------------------------------------------------------

struct QuadraticFit {
  std::array<double, 3> coeffs{{0.0, 0.0, 0.0}}; // y = c0 + c1 x + c2 x^2
  std::vector<double> residuals;
};

/// Degree-2 polynomial least squares, optionally weighted (weights multiply
/// the squared residuals). Residuals are reported in the original, unweighted
/// scale.
inline QuadraticFit fit_quadratic(const std::vector<double>& x,
                                  const std::vector<double>& y,
                                  const std::vector<double>* weights = nullptr) {
  if (x.size() != y.size())
    throw std::invalid_argument("fit_quadratic: x/y length mismatch");
  if (x.size() < 3)
    throw std::invalid_argument("fit_quadratic: need at least 3 points");
  if (weights && weights->size() != x.size())
    throw std::invalid_argument("fit_quadratic: weights length mismatch");

  const auto rows = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd design(rows, 3);
  Eigen::VectorXd target(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const double xi = x[static_cast<std::size_t>(i)];
    const double s =
        weights ? std::sqrt((*weights)[static_cast<std::size_t>(i)]) : 1.0;
    design(i, 0) = s;
    design(i, 1) = s * xi;
    design(i, 2) = s * xi * xi;
    target[i] = s * y[static_cast<std::size_t>(i)];
  }
  const Eigen::Vector3d c = design.colPivHouseholderQr().solve(target);

  QuadraticFit fit;
  fit.coeffs = {c[0], c[1], c[2]};
  fit.residuals.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    fit.residuals[i] = y[i] - (c[0] + c[1] * x[i] + c[2] * x[i] * x[i]);
  return fit;
}

// ---------------------------------------------------------------------------
// Minimal-sparsity sweep and extrapolation
// ---------------------------------------------------------------------------

struct PerNStat {
  Eigen::Index n = 0;
  Eigen::Index m = 0;
  int trials_requested = 0;
  int trials_used = 0;     // solver failures excluded
  int solver_failures = 0;
  int nonconverged = 0;    // used but without a converged final stage
  double mean_sparsity = std::numeric_limits<double>::quiet_NaN();
  double std_error = std::numeric_limits<double>::quiet_NaN();
};

struct ExtrapolationReport {
  double alpha = 0.0;
  std::uint64_t seed = 0;
  int trials = 0;
  bool weighted_fit = false;
  ensembles::DictionaryKind kind = ensembles::DictionaryKind::gaussian;
  solvers::IrlsParams irls;
  std::vector<PerNStat> per_n;
  std::array<double, 3> quadratic_coeffs{{0.0, 0.0, 0.0}}; // in 1/n
  std::vector<double> fit_residuals; // one per fitted n, in n_list order
  double kappa_extrapolated = 0.0;
  double kappa_theory = 0.0;
};

/// Averages the IRLS minimal sparsity fraction over seeded instances for each
/// n, then extrapolates n -> infinity with a quadratic fit in 1/n. The
/// intercept estimates the sparsity threshold at this alpha.
inline ExtrapolationReport sweep_min_sparsity(
    double alpha, const std::vector<Eigen::Index>& n_list, int trials,
    const solvers::IrlsParams& irls, std::uint64_t seed, int jobs = 0,
    bool weighted_fit = false,
    ensembles::DictionaryKind kind = ensembles::DictionaryKind::gaussian) {
  irls.validate();
  if (trials < 10)
    throw std::domain_error("sweep_min_sparsity: trials must be >= 10");
  if (n_list.empty())
    throw std::domain_error("sweep_min_sparsity: n_list must be non-empty");
  for (Eigen::Index n : n_list) {
    if (n < 2) throw std::domain_error("sweep_min_sparsity: n must be >= 2");
    if (detail::rounded_m(alpha, n) < 2)
      throw std::domain_error(
          "sweep_min_sparsity: n*alpha must round to m >= 2");
  }

  ExtrapolationReport report;
  report.alpha = alpha;
  report.seed = seed;
  report.trials = trials;
  report.weighted_fit = weighted_fit;
  report.kind = kind;
  report.irls = irls;
  report.kappa_theory = theory::kappa_star(alpha).kappa_star;

  const std::size_t per_n = static_cast<std::size_t>(trials);
  const std::size_t total = n_list.size() * per_n;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> sparsity(total, nan);
  std::vector<unsigned char> converged(total, 0);

  detail::parallel_for(total, jobs, [&](std::size_t task) {
    const std::size_t ni = task / per_n;
    const auto t = static_cast<int>(task % per_n);
    const Eigen::Index n = n_list[ni];
    const std::string label =
        "sweep/n=" + std::to_string(n) + "/t=" + std::to_string(t);
    const ensembles::ProblemInstance inst =
        ensembles::draw_instance(n, alpha, kind, rng::derive_seed(seed, label));
    const solvers::SparseSolution sol = solvers::irls_min_l0(inst, irls);
    if (!sol.failed) {
      sparsity[task] = sol.sparsity_fraction;
      converged[task] = sol.converged ? 1 : 0;
    }
  });

  std::vector<double> fit_x, fit_y, fit_w;
  for (std::size_t ni = 0; ni < n_list.size(); ++ni) {
    PerNStat stat;
    stat.n = n_list[ni];
    stat.m = detail::rounded_m(alpha, stat.n);
    stat.trials_requested = trials;
    const std::vector<double> used =
        detail::collect_used(sparsity, ni * per_n, (ni + 1) * per_n);
    stat.trials_used = static_cast<int>(used.size());
    stat.solver_failures = trials - stat.trials_used;
    for (std::size_t t = 0; t < per_n; ++t)
      if (!std::isnan(sparsity[ni * per_n + t]) && !converged[ni * per_n + t])
        ++stat.nonconverged;
    if (!used.empty()) {
      stat.mean_sparsity = stats::mean(used);
      if (used.size() >= 2)
        stat.std_error = stats::std_error(used, stat.mean_sparsity);
      fit_x.push_back(1.0 / static_cast<double>(stat.n));
      fit_y.push_back(stat.mean_sparsity);
      const double se =
          std::isnan(stat.std_error) ? 0.0 : stat.std_error;
      fit_w.push_back(1.0 / (std::max(se, 1e-12) * std::max(se, 1e-12)));
    }
    report.per_n.push_back(stat);
  }

  if (fit_x.size() < 3)
    throw std::runtime_error(
        "sweep_min_sparsity: fewer than 3 usable n values for the fit");
  const QuadraticFit fit =
      fit_quadratic(fit_x, fit_y, weighted_fit ? &fit_w : nullptr);
  report.quadratic_coeffs = fit.coeffs;
  report.fit_residuals = fit.residuals;
  report.kappa_extrapolated = fit.coeffs[0];
  return report;
}

// ---------------------------------------------------------------------------
// Synthesized-noise distribution check (QQ)
// ---------------------------------------------------------------------------

struct QqRow {
  double prob = 0.0;
  double empirical = 0.0;         // empirical quantile of the pooled sample
  double quantile_std_normal = 0.0;
  double quantile_theory = 0.0;   // N(0, second_moment_theory) quantile
};

struct QqReport {
  double alpha = 0.0;
  double kappa = 0.0;
  Eigen::Index n = 0;
  Eigen::Index m = 0;
  int trials = 0;
  std::uint64_t seed = 0;
  ensembles::DictionaryKind kind = ensembles::DictionaryKind::gaussian;
  std::size_t pooled_count = 0;
  double sample_mean = 0.0;
  double mean_std_error = 0.0;
  double sample_variance = 0.0;
  double second_moment_theory = 0.0;
  double ks_vs_measured = 0.0;   // against N(0, sample_variance)
  double ks_vs_std_normal = 0.0; // against N(0, 1)
  std::vector<QqRow> table;
};

/// Draws dictionaries, samples representations from the marginal law, and
/// synthesizes observations w = (1/sqrt(n)) D z. Pools all entries and
/// compares their distribution against a centered Gaussian with the measured
/// variance and against N(0,1).
inline QqReport qq_experiment(
    double alpha, double kappa, Eigen::Index n, int trials, std::uint64_t seed,
    int jobs = 0,
    ensembles::DictionaryKind kind = ensembles::DictionaryKind::gaussian,
    int table_points = 256) {
  const density::MarginalDensity params = density::density_params(kappa, alpha);
  if (n < 2) throw std::domain_error("qq_experiment: n must be >= 2");
  if (trials < 1) throw std::domain_error("qq_experiment: trials must be >= 1");
  if (table_points < 1)
    throw std::domain_error("qq_experiment: table_points must be >= 1");
  const Eigen::Index m = detail::rounded_m(alpha, n);
  if (m < 1)
    throw std::domain_error("qq_experiment: n*alpha must round to m >= 1");
  if (std::llround(kappa * static_cast<double>(n)) < 1)
    throw std::domain_error("qq_experiment: n*kappa must round to k >= 1");

  QqReport report;
  report.alpha = alpha;
  report.kappa = kappa;
  report.n = n;
  report.m = m;
  report.trials = trials;
  report.seed = seed;
  report.kind = kind;
  report.second_moment_theory = theory::second_moment_achievable(alpha, kappa);

  const std::size_t per_trial = static_cast<std::size_t>(m);
  std::vector<double> pooled(static_cast<std::size_t>(trials) * per_trial);
  report.pooled_count = pooled.size();

  detail::parallel_for(static_cast<std::size_t>(trials), jobs,
                       [&](std::size_t t) {
    const std::uint64_t inst_seed =
        rng::derive_seed(seed, "qq/t=" + std::to_string(t));
    rng::Stream dict_stream(inst_seed, "dictionary");
    rng::Stream rep_stream(inst_seed, "representation");
    const Eigen::MatrixXd dict =
        ensembles::draw_dictionary(m, n, kind, dict_stream);
    const Eigen::VectorXd z =
        density::sample_sparse_vector(n, params, rep_stream);
    const Eigen::VectorXd w = ensembles::synthesize(dict, z);
    for (Eigen::Index i = 0; i < m; ++i)
      pooled[t * per_trial + static_cast<std::size_t>(i)] = w[i];
  });

  report.sample_mean = stats::mean(pooled);
  report.sample_variance = stats::sample_variance(pooled, report.sample_mean);
  report.mean_std_error = std::sqrt(report.sample_variance /
                                    static_cast<double>(pooled.size()));

  std::vector<double> sorted = pooled;
  std::sort(sorted.begin(), sorted.end());
  const double s_meas = std::sqrt(report.sample_variance);
  report.ks_vs_measured = stats::ks_statistic_sorted(
      sorted, [&](double x) { return 1.0 - theory::q_function(x / s_meas); });
  report.ks_vs_std_normal = stats::ks_statistic_sorted(
      sorted, [&](double x) { return 1.0 - theory::q_function(x); });

  const double s_theory = std::sqrt(report.second_moment_theory);
  const auto count = static_cast<double>(sorted.size());
  for (int j = 0; j < table_points; ++j) {
    QqRow row;
    row.prob = (static_cast<double>(j) + 0.5) / table_points;
    auto idx = static_cast<std::size_t>(row.prob * count);
    if (idx >= sorted.size()) idx = sorted.size() - 1;
    row.empirical = sorted[idx];
    row.quantile_std_normal = theory::normal_quantile(row.prob);
    row.quantile_theory = s_theory * row.quantile_std_normal;
    report.table.push_back(row);
  }
  return report;
}

// ---------------------------------------------------------------------------
// Converse-region energy scan (exhaustive oracle)
// ---------------------------------------------------------------------------

struct EnergyScanRow {
  Eigen::Index n = 0;
  Eigen::Index m = 0;
  Eigen::Index k = 0;
  int trials = 0;
  double mean_energy = 0.0;
  double std_error = 0.0;
  double theory = 0.0;     // limiting law at the nominal kappa
  double kappa_eff = 0.0;  // k / n actually enforced at this n
  double theory_eff = 0.0; // limiting law at kappa_eff
};

struct EnergyScanReport {
  double alpha = 0.0;
  double kappa = 0.0;
  double theory_min_energy = 0.0;
  bool achievable = false;
  int trials = 0;
  std::uint64_t seed = 0;
  ensembles::DictionaryKind kind = ensembles::DictionaryKind::gaussian;
  std::vector<EnergyScanRow> rows;
};

/// Averages the exhaustive-search minimal residual energy at sparsity budget
/// k = floor(kappa*n) over seeded instances, per n, against the limiting law.
/// floor enforces the budget reading of kappa-sparsity (||z||_0 / n <= kappa);
/// each row also reports the law at the fraction k/n actually enforced, since
/// rounding distortion dominates at desk-scale n.
inline EnergyScanReport converse_energy_experiment(
    double alpha, double kappa, const std::vector<Eigen::Index>& n_list,
    int trials, std::uint64_t seed, int jobs = 0,
    ensembles::DictionaryKind kind = ensembles::DictionaryKind::gaussian) {
  const theory::ConverseLaw law = theory::min_energy(alpha, kappa);
  if (trials < 1)
    throw std::domain_error("converse_energy_experiment: trials must be >= 1");
  if (n_list.empty())
    throw std::domain_error("converse_energy_experiment: empty n_list");

  EnergyScanReport report;
  report.alpha = alpha;
  report.kappa = kappa;
  report.theory_min_energy = law.min_energy;
  report.achievable = law.achievable;
  report.trials = trials;
  report.seed = seed;
  report.kind = kind;

  std::vector<Eigen::Index> ks(n_list.size());
  for (std::size_t ni = 0; ni < n_list.size(); ++ni) {
    const Eigen::Index n = n_list[ni];
    if (n < 2)
      throw std::domain_error("converse_energy_experiment: n must be >= 2");
    if (detail::rounded_m(alpha, n) < 1)
      throw std::domain_error(
          "converse_energy_experiment: n*alpha must round to m >= 1");
    const auto k = static_cast<Eigen::Index>(
        std::floor(kappa * static_cast<double>(n) + 1e-9));
    if (k < 1)
      throw std::domain_error(
          "converse_energy_experiment: floor(n*kappa) must be >= 1");
    if (n > 24)
      throw std::domain_error(
          "converse_energy_experiment: n must be <= 24 (exhaustive search)");
    ks[ni] = k;
  }

  const std::size_t per_n = static_cast<std::size_t>(trials);
  std::vector<double> energies(n_list.size() * per_n, 0.0);

  detail::parallel_for(energies.size(), jobs, [&](std::size_t task) {
    const std::size_t ni = task / per_n;
    const auto t = static_cast<int>(task % per_n);
    const Eigen::Index n = n_list[ni];
    const std::string label =
        "energy/n=" + std::to_string(n) + "/t=" + std::to_string(t);
    const ensembles::ProblemInstance inst =
        ensembles::draw_instance(n, alpha, kind, rng::derive_seed(seed, label));
    energies[task] =
        solvers::brute_force_best_ksupport(inst, ks[ni]).energy;
  });

  for (std::size_t ni = 0; ni < n_list.size(); ++ni) {
    EnergyScanRow row;
    row.n = n_list[ni];
    row.m = detail::rounded_m(alpha, row.n);
    row.k = ks[ni];
    row.trials = trials;
    const std::vector<double> used(energies.begin() + ni * per_n,
                                   energies.begin() + (ni + 1) * per_n);
    row.mean_energy = stats::mean(used);
    row.std_error = used.size() >= 2 ? stats::std_error(used, row.mean_energy)
                                     : 0.0;
    row.theory = law.min_energy;
    row.kappa_eff = static_cast<double>(row.k) / static_cast<double>(row.n);
    row.theory_eff = theory::min_energy(alpha, row.kappa_eff).min_energy;
    report.rows.push_back(row);
  }
  return report;
}

// ---------------------------------------------------------------------------
// Noisy compressed sensing: decodable region and LS mean-square error
// ---------------------------------------------------------------------------

struct CsOutcome {
  double alpha = 0.0;
  double kappa_x = 0.0;
  double snr = std::numeric_limits<double>::quiet_NaN();
  bool decodable = false;
  bool noiseless_decodable = false; // weak threshold alpha > kappa_x
  double kappa_star = 0.0;
  double noisy_bound = 0.0; // (alpha - kappa_star) / (1 - kappa_star)
  double kappa0 = 0.0;      // oracle-support fraction
  double mse_paper = std::numeric_limits<double>::quiet_NaN();   // kappa0/snr
  double mse_wishart = std::numeric_limits<double>::quiet_NaN();
  double mse_measured = std::numeric_limits<double>::quiet_NaN();
  double mse_ratio_to_paper = std::numeric_limits<double>::quiet_NaN();
  Eigen::Index n = 0;
  Eigen::Index m = 0;
  Eigen::Index k_x = 0;
  Eigen::Index k0 = 0;
  int trials = 0;
  int trials_used = 0;
  int rank_failures = 0;
  std::uint64_t seed = 0;
  ensembles::DictionaryKind kind = ensembles::DictionaryKind::gaussian;
};

/// Region geometry only: decodable flag, oracle-support fraction kappa0, and
/// the noiseless weak-threshold flag for comparison.
inline CsOutcome cs_region(double alpha, double kappa_x) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::domain_error("cs_region: alpha must lie in (0,1)");
  if (!(kappa_x > 0.0 && kappa_x < 1.0))
    throw std::domain_error("cs_region: kappa_x must lie in (0,1)");

  CsOutcome out;
  out.alpha = alpha;
  out.kappa_x = kappa_x;
  out.kappa_star = theory::kappa_star(alpha).kappa_star;
  out.noisy_bound = (alpha - out.kappa_star) / (1.0 - out.kappa_star);
  out.decodable = kappa_x <= out.noisy_bound;
  out.noiseless_decodable = alpha > kappa_x;
  out.kappa0 = kappa_x + out.kappa_star - kappa_x * out.kappa_star;
  return out;
}

/// Monte Carlo LS error on the oracle support for the Gaussian vector channel
/// y = sqrt(snr/m) D x + omega. The oracle support has size k0 =
/// round(kappa0*n) and contains the true support; the surplus is uniform.
inline CsOutcome cs_mse_experiment(
    double alpha, double kappa_x, double snr, Eigen::Index n, int trials,
    std::uint64_t seed, int jobs = 0,
    ensembles::DictionaryKind kind = ensembles::DictionaryKind::gaussian) {
  CsOutcome out = cs_region(alpha, kappa_x);
  if (!out.decodable)
    throw std::domain_error("cs_mse_experiment: point outside decodable region");
  if (!(snr > 0.0)) throw std::domain_error("cs_mse_experiment: snr must be > 0");
  if (n < 2) throw std::domain_error("cs_mse_experiment: n must be >= 2");
  if (trials < 1)
    throw std::domain_error("cs_mse_experiment: trials must be >= 1");

  const Eigen::Index m = detail::rounded_m(alpha, n);
  const auto k_x =
      static_cast<Eigen::Index>(std::llround(kappa_x * static_cast<double>(n)));
  auto k0 =
      static_cast<Eigen::Index>(std::llround(out.kappa0 * static_cast<double>(n)));
  if (k0 < k_x) k0 = k_x;
  if (!(k0 < m - 2))
    throw std::domain_error(
        "cs_mse_experiment: oracle support k0 must satisfy k0 < m - 2");

  out.snr = snr;
  out.n = n;
  out.m = m;
  out.k_x = k_x;
  out.k0 = k0;
  out.trials = trials;
  out.seed = seed;
  out.kind = kind;
  out.mse_paper = out.kappa0 / snr;
  out.mse_wishart = (static_cast<double>(m) / (snr * static_cast<double>(n))) *
                    static_cast<double>(k0) / static_cast<double>(m - k0 - 1);

  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> mse(static_cast<std::size_t>(trials), nan);

  std::vector<Eigen::Index> all_indices(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i)
    all_indices[static_cast<std::size_t>(i)] = i;

  detail::parallel_for(static_cast<std::size_t>(trials), jobs,
                       [&](std::size_t t) {
    const std::uint64_t inst_seed =
        rng::derive_seed(seed, "csmse/t=" + std::to_string(t));
    const ensembles::ProblemInstance inst =
        ensembles::draw_instance(n, alpha, kind, inst_seed);

    rng::Stream support_stream(inst_seed, "signal-support");
    const std::vector<Eigen::Index> support = detail::sample_subset(
        all_indices, static_cast<std::size_t>(k_x), support_stream);

    rng::Stream value_stream(inst_seed, "signal-values");
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    for (Eigen::Index idx : support) x[idx] = value_stream.normal();

    std::vector<Eigen::Index> complement;
    complement.reserve(static_cast<std::size_t>(n - k_x));
    {
      std::size_t si = 0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (si < support.size() && support[si] == i) {
          ++si;
        } else {
          complement.push_back(i);
        }
      }
    }
    rng::Stream extra_stream(inst_seed, "oracle-extra");
    const std::vector<Eigen::Index> extras = detail::sample_subset(
        std::move(complement), static_cast<std::size_t>(k0 - k_x),
        extra_stream);

    std::vector<Eigen::Index> oracle;
    oracle.reserve(static_cast<std::size_t>(k0));
    std::merge(support.begin(), support.end(), extras.begin(), extras.end(),
               std::back_inserter(oracle));

    const Eigen::VectorXd y =
        std::sqrt(snr / static_cast<double>(m)) * (inst.dictionary * x) +
        inst.omega;
    const solvers::LsResult ls =
        solvers::ls_on_support(y, inst.dictionary, oracle, snr);
    if (ls.ok)
      mse[t] = (ls.x_hat - x).squaredNorm() / static_cast<double>(n);
  });

  const std::vector<double> used = detail::collect_used(mse, 0, mse.size());
  out.trials_used = static_cast<int>(used.size());
  out.rank_failures = trials - out.trials_used;
  if (used.empty())
    throw std::runtime_error("cs_mse_experiment: every trial was rank-deficient");
  out.mse_measured = stats::mean(used);
  out.mse_ratio_to_paper = out.mse_measured / out.mse_paper;
  return out;
}

// ---------------------------------------------------------------------------
// Threshold curve tabulation
// ---------------------------------------------------------------------------

struct CurveRow {
  double alpha = 0.0;
  double kappa_star = 0.0;
  double trivial = 0.0; // the kappa = alpha line
};

inline std::vector<CurveRow> threshold_curve(const std::vector<double>& grid) {
  std::vector<CurveRow> rows;
  rows.reserve(grid.size());
  for (double a : grid) {
    CurveRow row;
    row.alpha = a;
    row.kappa_star = theory::kappa_star(a).kappa_star; // validates a
    row.trivial = a;
    rows.push_back(row);
  }
  return rows;
}

} // namespace swn::experiments
