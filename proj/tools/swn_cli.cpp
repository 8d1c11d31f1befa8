// Command-line front end: computes thresholds/densities/energy laws and runs
// the Monte Carlo experiments, emitting CSV or JSON with a reproducibility
// header (tool version, generator name, config echo, seed).
//
// Exit codes: 0 success, 2 usage error, 3 domain error (violated
// precondition), 4 numerical failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "swn/swn.hpp"

namespace {

using nlohmann::ordered_json;

/// Command-line/config mistakes that should exit with status 2.
struct UsageError : std::exception {
  std::string message;
  explicit UsageError(std::string msg) : message(std::move(msg)) {}
  const char* what() const noexcept override { return message.c_str(); }
};

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Argument/config plumbing
// ---------------------------------------------------------------------------

struct CommonOpts {
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::optional<std::string> out;
  std::optional<std::string> format;
  std::optional<std::string> config_path;
  nlohmann::json config = nlohmann::json::object();
};

void add_common_options(CLI::App* sub, CommonOpts& c) {
  sub->add_option("--seed", c.seed, "RNG seed (fallback: SWN_SEED, then 12345)");
  sub->add_option("--jobs", c.jobs, "worker threads; 0 = machine parallelism");
  sub->add_option("--out", c.out, "output file (default: stdout)");
  sub->add_option("--format", c.format, "output format")
      ->check(CLI::IsMember({"csv", "json"}));
  sub->add_option("--config", c.config_path,
                  "JSON config file; flags override config values");
}

nlohmann::json load_config(const std::optional<std::string>& path) {
  if (!path) return nlohmann::json::object();
  std::ifstream f(*path);
  if (!f) throw UsageError("cannot open config file: " + *path);
  try {
    nlohmann::json j;
    f >> j;
    if (!j.is_object()) throw UsageError("config root must be a JSON object");
    return j;
  } catch (const nlohmann::json::parse_error& e) {
    throw UsageError(std::string("config parse error: ") + e.what());
  }
}

template <class T>
std::optional<T> cfg_get(const nlohmann::json& cfg, const std::string& key) {
  if (!cfg.is_object() || !cfg.contains(key)) return std::nullopt;
  try {
    return cfg.at(key).get<T>();
  } catch (const std::exception&) {
    throw UsageError("config key '" + key + "' has the wrong type");
  }
}

/// Flag value if given, else config value, else default; throws a usage error
/// when required (no default) and absent everywhere.
template <class T>
T pick(const std::optional<T>& flag, const CommonOpts& c, const char* key,
       std::optional<std::type_identity_t<T>> fallback = std::nullopt) {
  if (flag) return *flag;
  if (auto v = cfg_get<T>(c.config, key)) return *v;
  if (fallback) return *fallback;
  throw UsageError(std::string("missing required option --") + key);
}

std::uint64_t resolve_seed(const CommonOpts& c) {
  if (c.seed) return *c.seed;
  if (auto v = cfg_get<std::uint64_t>(c.config, "seed")) return *v;
  if (const char* env = std::getenv("SWN_SEED")) {
    char* end = nullptr;
    errno = 0;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (errno != 0 || end == env || *end != '\0')
      throw UsageError("SWN_SEED is not a valid unsigned integer");
    return static_cast<std::uint64_t>(v);
  }
  return 12345;
}

std::string resolve_format(const CommonOpts& c, const std::string& out_path,
                           const char* command_default) {
  std::string f;
  if (c.format) {
    f = *c.format;
  } else if (auto v = cfg_get<std::string>(c.config, "format")) {
    f = *v;
  } else if (out_path.size() >= 4 &&
             out_path.compare(out_path.size() - 4, 4, ".csv") == 0) {
    f = "csv";
  } else if (out_path.size() >= 5 &&
             out_path.compare(out_path.size() - 5, 5, ".json") == 0) {
    f = "json";
  } else {
    f = command_default;
  }
  if (f != "csv" && f != "json")
    throw UsageError("format must be 'csv' or 'json', got '" + f + "'");
  return f;
}

std::string resolve_out(const CommonOpts& c) {
  if (c.out) return *c.out;
  if (auto v = cfg_get<std::string>(c.config, "out")) return *v;
  return "";
}

void write_output(const std::string& out_path, const std::string& content) {
  if (out_path.empty()) {
    std::cout << content;
    std::cout.flush();
    return;
  }
  std::ofstream f(out_path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open output file: " + out_path);
  f << content;
  if (!f) throw std::runtime_error("failed writing output file: " + out_path);
}

double parse_double(const std::string& s, const char* what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw UsageError("");
    return v;
  } catch (const UsageError&) {
  } catch (const std::exception&) {
  }
  throw UsageError(std::string("cannot parse ") + what + ": '" + s + "'");
}

long long parse_int(const std::string& s, const char* what) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(s, &pos);
    if (pos != s.size()) throw UsageError("");
    return v;
  } catch (const UsageError&) {
  } catch (const std::exception&) {
  }
  throw UsageError(std::string("cannot parse ") + what + ": '" + s + "'");
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  parts.push_back(cur);
  return parts;
}

/// Grid spec "start:stop:step" -> inclusive arithmetic grid.
std::vector<double> parse_grid(const std::string& spec) {
  const std::vector<std::string> parts = split(spec, ':');
  if (parts.size() != 3)
    throw UsageError("grid must be start:stop:step, got '" + spec + "'");
  const double start = parse_double(parts[0], "grid start");
  const double stop = parse_double(parts[1], "grid stop");
  const double step = parse_double(parts[2], "grid step");
  if (!(step > 0.0)) throw UsageError("grid step must be positive");
  if (stop < start) throw UsageError("grid stop must be >= start");
  const auto count =
      static_cast<long long>(std::floor((stop - start) / step + 1e-9)) + 1;
  if (count > 10'000'000) throw UsageError("grid has too many points");
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(count));
  for (long long i = 0; i < count; ++i)
    values.push_back(start + static_cast<double>(i) * step);
  return values;
}

std::vector<Eigen::Index> parse_n_list(const std::string& s) {
  std::vector<Eigen::Index> values;
  for (const std::string& part : split(s, ',')) {
    const long long v = parse_int(part, "n-list entry");
    if (v < 2) throw UsageError("n-list entries must be >= 2");
    values.push_back(static_cast<Eigen::Index>(v));
  }
  return values;
}

std::vector<double> parse_double_list(const std::string& s, const char* what) {
  std::vector<double> values;
  for (const std::string& part : split(s, ',')) {
    values.push_back(parse_double(part, what));
  }
  return values;
}

/// n-list: flag string wins, else config (string or integer array), else
/// default string.
std::vector<Eigen::Index> pick_n_list(const std::optional<std::string>& flag,
                                      const CommonOpts& c, const char* key,
                                      const char* fallback) {
  if (flag) return parse_n_list(*flag);
  if (c.config.is_object() && c.config.contains(key)) {
    const auto& v = c.config.at(key);
    if (v.is_string()) return parse_n_list(v.get<std::string>());
    if (v.is_array()) {
      std::vector<Eigen::Index> values;
      for (const auto& e : v) {
        if (!e.is_number_integer())
          throw UsageError(std::string("config key '") + key +
                           "' must contain integers");
        values.push_back(static_cast<Eigen::Index>(e.get<long long>()));
      }
      return values;
    }
    throw UsageError(std::string("config key '") + key +
                     "' must be a string or an integer array");
  }
  return parse_n_list(fallback);
}

swn::ensembles::DictionaryKind pick_kind(const std::optional<std::string>& flag,
                                         const CommonOpts& c) {
  const std::string s = flag ? *flag
                             : pick<std::string>(std::nullopt, c, "kind",
                                                 std::string("gaussian"));
  try {
    return swn::ensembles::kind_from_string(s);
  } catch (const std::exception&) {
    throw UsageError("kind must be 'gaussian' or 'bernoulli', got '" + s + "'");
  }
}

struct IrlsFlags {
  std::optional<std::string> p_schedule;
  std::optional<double> epsilon_init;
  std::optional<double> epsilon_decay;
  std::optional<double> epsilon_min;
  std::optional<int> max_iters;
  std::optional<double> convergence_tol;
  std::optional<double> zero_tol;
  std::optional<double> energy_tol;
  std::optional<int> restarts;
  std::optional<int> polish_kicks;
  std::optional<std::uint64_t> solver_seed;
};

void add_irls_options(CLI::App* sub, IrlsFlags& f) {
  sub->add_option("--irls-p-schedule", f.p_schedule,
                  "comma-separated p continuation, e.g. 1,0.5,0.1");
  sub->add_option("--irls-epsilon-init", f.epsilon_init,
                  "initial smoothing regularizer");
  sub->add_option("--irls-epsilon-decay", f.epsilon_decay,
                  "regularizer decay factor per stage");
  sub->add_option("--irls-epsilon-min", f.epsilon_min,
                  "final smoothing regularizer (continuation floor)");
  sub->add_option("--irls-max-iters", f.max_iters, "max iterations per stage");
  sub->add_option("--irls-convergence-tol", f.convergence_tol,
                  "relative iterate-change tolerance");
  sub->add_option("--irls-zero-tol", f.zero_tol,
                  "support threshold relative to max |z_i|");
  sub->add_option("--irls-energy-tol", f.energy_tol,
                  "residual energy (relative to omega's) counted as zero");
  sub->add_option("--irls-restarts", f.restarts,
                  "continuation runs from random initial weights");
  sub->add_option("--irls-kicks", f.polish_kicks,
                  "random support perturbations during polishing");
  sub->add_option("--irls-solver-seed", f.solver_seed,
                  "seed for solver-internal randomness");
}

swn::solvers::IrlsParams pick_irls(const IrlsFlags& f, const CommonOpts& c) {
  swn::solvers::IrlsParams p;
  if (f.p_schedule) {
    p.p_schedule = parse_double_list(*f.p_schedule, "irls-p-schedule entry");
  } else if (c.config.is_object() && c.config.contains("irls-p-schedule")) {
    const auto& v = c.config.at("irls-p-schedule");
    if (v.is_string()) {
      p.p_schedule =
          parse_double_list(v.get<std::string>(), "irls-p-schedule entry");
    } else if (v.is_array()) {
      p.p_schedule.clear();
      for (const auto& e : v) {
        if (!e.is_number())
          throw UsageError("config key 'irls-p-schedule' must hold numbers");
        p.p_schedule.push_back(e.get<double>());
      }
    } else {
      throw UsageError(
          "config key 'irls-p-schedule' must be a string or number array");
    }
  }
  p.epsilon_init = pick(f.epsilon_init, c, "irls-epsilon-init", p.epsilon_init);
  p.epsilon_decay =
      pick(f.epsilon_decay, c, "irls-epsilon-decay", p.epsilon_decay);
  p.epsilon_min = pick(f.epsilon_min, c, "irls-epsilon-min", p.epsilon_min);
  p.max_iters = pick(f.max_iters, c, "irls-max-iters", p.max_iters);
  p.convergence_tol =
      pick(f.convergence_tol, c, "irls-convergence-tol", p.convergence_tol);
  p.zero_tol = pick(f.zero_tol, c, "irls-zero-tol", p.zero_tol);
  p.energy_tol = pick(f.energy_tol, c, "irls-energy-tol", p.energy_tol);
  p.restarts = pick(f.restarts, c, "irls-restarts", p.restarts);
  p.polish_kicks = pick(f.polish_kicks, c, "irls-kicks", p.polish_kicks);
  p.solver_seed = pick(f.solver_seed, c, "irls-solver-seed", p.solver_seed);
  return p;
}

// ---------------------------------------------------------------------------
// Output assembly
// ---------------------------------------------------------------------------

std::string echo_scalar(const ordered_json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_float()) return g17(v.get<double>());
  if (v.is_number()) return v.dump();
  if (v.is_array()) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) s += ",";
      s += echo_scalar(v[i]);
    }
    return s;
  }
  return v.dump();
}

std::string csv_metadata(const std::string& command, const ordered_json& cfg) {
  std::string s;
  s += "# swn " + std::string(swn::version) + "\n";
  s += "# generator=" + std::string(swn::rng::scheme) + "\n";
  s += "# command=" + command + "\n";
  for (const auto& [k, v] : cfg.items()) s += "# " + k + "=" + echo_scalar(v) + "\n";
  return s;
}

std::string json_document(const std::string& command, const ordered_json& cfg,
                          const ordered_json& report) {
  ordered_json root;
  root["tool"] = "swn";
  root["version"] = swn::version;
  root["generator"] = swn::rng::scheme;
  root["command"] = command;
  root["config"] = cfg;
  root["report"] = report;
  return root.dump(2) + "\n";
}

ordered_json irls_echo(const swn::solvers::IrlsParams& p) {
  ordered_json j;
  j["irls-p-schedule"] = p.p_schedule;
  j["irls-epsilon-init"] = p.epsilon_init;
  j["irls-epsilon-decay"] = p.epsilon_decay;
  j["irls-epsilon-min"] = p.epsilon_min;
  j["irls-max-iters"] = p.max_iters;
  j["irls-convergence-tol"] = p.convergence_tol;
  j["irls-zero-tol"] = p.zero_tol;
  j["irls-energy-tol"] = p.energy_tol;
  j["irls-restarts"] = p.restarts;
  j["irls-kicks"] = p.polish_kicks;
  j["irls-solver-seed"] = p.solver_seed;
  return j;
}

void merge_into(ordered_json& dst, const ordered_json& src) {
  for (const auto& [k, v] : src.items()) dst[k] = v;
}

// ---------------------------------------------------------------------------
// Subcommand handlers
// ---------------------------------------------------------------------------

int emit(const std::string& command, const ordered_json& cfg,
         const std::string& format, const std::string& out_path,
         const ordered_json& report, const std::string& csv_body) {
  if (format == "json") {
    write_output(out_path, json_document(command, cfg, report));
  } else {
    write_output(out_path, csv_metadata(command, cfg) + csv_body);
  }
  return 0;
}

struct ThresholdOpts {
  CommonOpts common;
  std::optional<double> alpha;
  std::optional<double> kappa;
};

int run_threshold(ThresholdOpts& o) {
  const CommonOpts& c = o.common;
  std::optional<double> alpha = o.alpha, kappa = o.kappa;
  if (!alpha) alpha = cfg_get<double>(c.config, "alpha");
  if (!kappa) kappa = cfg_get<double>(c.config, "kappa");
  if (alpha.has_value() == kappa.has_value())
    throw UsageError("threshold requires exactly one of --alpha or --kappa");

  const swn::theory::ThresholdPoint pt =
      alpha ? swn::theory::kappa_star(*alpha) : swn::theory::alpha_star(*kappa);

  ordered_json cfg;
  if (alpha) cfg["alpha"] = *alpha;
  if (kappa) cfg["kappa"] = *kappa;
  cfg["seed"] = resolve_seed(c);

  ordered_json report;
  report["alpha"] = pt.alpha;
  report["kappa"] = pt.kappa;
  report["xi"] = pt.xi;
  report["kappa_star"] = pt.kappa_star;
  report["alpha_star"] = pt.alpha_star;

  std::string csv = "alpha,kappa,xi,kappa_star,alpha_star\n";
  csv += g17(pt.alpha) + "," + g17(pt.kappa) + "," + g17(pt.xi) + "," +
         g17(pt.kappa_star) + "," + g17(pt.alpha_star) + "\n";

  const std::string out = resolve_out(c);
  return emit("threshold", cfg, resolve_format(c, out, "json"), out, report,
              csv);
}

struct PdfOpts {
  CommonOpts common;
  std::optional<double> alpha;
  std::optional<double> kappa;
  std::optional<std::string> grid;
};

int run_pdf(PdfOpts& o) {
  const CommonOpts& c = o.common;
  const double alpha = pick(o.alpha, c, "alpha");
  const double kappa = pick(o.kappa, c, "kappa");
  const std::string grid_spec =
      pick(o.grid, c, "grid", std::string("-10:10:0.01"));
  const std::vector<double> grid = parse_grid(grid_spec);

  const swn::density::MarginalDensity params =
      swn::density::density_params(kappa, alpha);

  ordered_json cfg;
  cfg["alpha"] = alpha;
  cfg["kappa"] = kappa;
  cfg["grid"] = grid_spec;
  cfg["seed"] = resolve_seed(c);

  ordered_json report;
  report["kappa"] = params.kappa;
  report["alpha"] = params.alpha;
  report["xi"] = params.xi;
  report["gap"] = params.gap;
  report["scale_sq"] = params.scale_sq;
  report["alpha_star"] = params.alpha_star;
  ordered_json rows = ordered_json::array();
  std::string csv = "zeta,p\n";
  for (double zeta : grid) {
    const double p = swn::density::pdf(zeta, params);
    rows.push_back(ordered_json{{"zeta", zeta}, {"p", p}});
    csv += g17(zeta) + "," + g17(p) + "\n";
  }
  report["rows"] = rows;

  const std::string out = resolve_out(c);
  return emit("pdf", cfg, resolve_format(c, out, "csv"), out, report, csv);
}

struct SampleOpts {
  CommonOpts common;
  std::optional<double> alpha;
  std::optional<double> kappa;
  std::optional<long long> count;
};

int run_sample(SampleOpts& o) {
  const CommonOpts& c = o.common;
  const double alpha = pick(o.alpha, c, "alpha");
  const double kappa = pick(o.kappa, c, "kappa");
  const long long count = pick(o.count, c, "count", 10000LL);
  if (count < 1) throw UsageError("count must be >= 1");
  const std::uint64_t seed = resolve_seed(c);

  const swn::density::MarginalDensity params =
      swn::density::density_params(kappa, alpha);
  swn::rng::Stream stream(seed, "sample");

  ordered_json cfg;
  cfg["alpha"] = alpha;
  cfg["kappa"] = kappa;
  cfg["count"] = count;
  cfg["seed"] = seed;

  std::string csv = "value\n";
  ordered_json values = ordered_json::array();
  for (long long i = 0; i < count; ++i) {
    const double v = swn::density::sample_nonzero(params, stream);
    csv += g17(v) + "\n";
    values.push_back(v);
  }
  ordered_json report;
  report["count"] = count;
  report["values"] = values;

  const std::string out = resolve_out(c);
  return emit("sample", cfg, resolve_format(c, out, "csv"), out, report, csv);
}

struct SparsestOpts {
  CommonOpts common;
  IrlsFlags irls;
  std::optional<long long> n;
  std::optional<double> alpha;
  std::optional<std::string> kind;
  std::optional<std::string> dump_instance;
};

int run_sparsest(SparsestOpts& o) {
  const CommonOpts& c = o.common;
  const long long n = pick(o.n, c, "n");
  const double alpha = pick(o.alpha, c, "alpha");
  const auto kind = pick_kind(o.kind, c);
  const swn::solvers::IrlsParams irls = pick_irls(o.irls, c);
  const std::uint64_t seed = resolve_seed(c);
  if (n < 2) throw UsageError("n must be >= 2");

  const swn::ensembles::ProblemInstance inst = swn::ensembles::draw_instance(
      static_cast<Eigen::Index>(n), alpha, kind, seed);
  if (o.dump_instance) {
    std::ofstream f(*o.dump_instance, std::ios::binary);
    if (!f)
      throw std::runtime_error("cannot open instance dump: " + *o.dump_instance);
    swn::ensembles::write_instance_csv(f, inst);
  }
  const swn::solvers::SparseSolution sol = swn::solvers::irls_min_l0(inst, irls);

  ordered_json cfg;
  cfg["n"] = n;
  cfg["alpha"] = alpha;
  cfg["kind"] = swn::ensembles::to_string(kind);
  merge_into(cfg, irls_echo(irls));
  cfg["seed"] = seed;

  ordered_json report;
  report["n"] = inst.n;
  report["m"] = inst.m;
  report["alpha"] = inst.alpha;
  report["seed"] = inst.seed;
  report["sparsity_fraction"] = sol.sparsity_fraction;
  report["support_size"] = sol.support.size();
  report["support"] = sol.support;
  ordered_json support_values = ordered_json::array();
  for (Eigen::Index idx : sol.support) support_values.push_back(sol.z[idx]);
  report["support_values"] = support_values;
  report["energy"] = sol.energy;
  report["iterations"] = sol.iterations;
  report["converged"] = sol.converged;
  report["failed"] = sol.failed;

  // CSV form is a full solution dump (index,value); diagnostics ride along as
  // a JSON sidecar when writing to a file.
  std::string csv = "index,value\n";
  for (Eigen::Index i = 0; i < inst.n; ++i)
    csv += std::to_string(i) + "," + g17(sol.z[i]) + "\n";

  const std::string out = resolve_out(c);
  const std::string format = resolve_format(c, out, "json");
  emit("sparsest", cfg, format, out, report, csv);
  if (format == "csv" && !out.empty()) {
    write_output(out + ".json", json_document("sparsest", cfg, report));
  }
  return sol.failed ? 4 : 0;
}

struct ExtrapolateOpts {
  CommonOpts common;
  IrlsFlags irls;
  std::optional<double> alpha;
  std::optional<std::string> n_list;
  std::optional<int> trials;
  std::optional<std::string> kind;
  bool weighted = false;
};

int run_extrapolate(ExtrapolateOpts& o) {
  const CommonOpts& c = o.common;
  const double alpha = pick(o.alpha, c, "alpha");
  const std::vector<Eigen::Index> n_list =
      pick_n_list(o.n_list, c, "n-list", "40,60,80,120,160,200");
  const int trials = pick(o.trials, c, "trials", 50);
  const auto kind = pick_kind(o.kind, c);
  const swn::solvers::IrlsParams irls = pick_irls(o.irls, c);
  const bool weighted =
      o.weighted || cfg_get<bool>(c.config, "weighted").value_or(false);
  const std::uint64_t seed = resolve_seed(c);
  const int jobs = pick(o.common.jobs, c, "jobs", 0);

  const swn::experiments::ExtrapolationReport rep =
      swn::experiments::sweep_min_sparsity(alpha, n_list, trials, irls, seed,
                                           jobs, weighted, kind);

  ordered_json cfg;
  cfg["alpha"] = alpha;
  {
    std::string nl;
    for (std::size_t i = 0; i < n_list.size(); ++i) {
      if (i) nl += ",";
      nl += std::to_string(n_list[i]);
    }
    cfg["n-list"] = nl;
  }
  cfg["trials"] = trials;
  cfg["kind"] = swn::ensembles::to_string(kind);
  cfg["weighted"] = weighted;
  merge_into(cfg, irls_echo(irls));
  cfg["seed"] = seed;

  // Residuals come back one per fitted row, in n_list order; spread them onto
  // the per-n rows (excluded rows get NaN).
  std::vector<double> row_residual(rep.per_n.size(),
                                   std::numeric_limits<double>::quiet_NaN());
  {
    std::size_t r = 0;
    for (std::size_t i = 0; i < rep.per_n.size(); ++i)
      if (rep.per_n[i].trials_used > 0 && r < rep.fit_residuals.size())
        row_residual[i] = rep.fit_residuals[r++];
  }

  ordered_json report;
  report["alpha"] = rep.alpha;
  report["kappa_theory"] = rep.kappa_theory;
  report["kappa_extrapolated"] = rep.kappa_extrapolated;
  report["quadratic_coeffs"] = rep.quadratic_coeffs;
  report["weighted_fit"] = rep.weighted_fit;
  ordered_json per_n = ordered_json::array();
  for (std::size_t i = 0; i < rep.per_n.size(); ++i) {
    const auto& s = rep.per_n[i];
    ordered_json row;
    row["n"] = s.n;
    row["m"] = s.m;
    row["trials_requested"] = s.trials_requested;
    row["trials_used"] = s.trials_used;
    row["solver_failures"] = s.solver_failures;
    row["nonconverged"] = s.nonconverged;
    row["mean_sparsity"] = s.mean_sparsity;
    row["std_error"] = s.std_error;
    row["fit_residual"] = row_residual[i];
    per_n.push_back(row);
  }
  report["per_n"] = per_n;

  std::string csv;
  csv += "# kappa_theory=" + g17(rep.kappa_theory) + "\n";
  csv += "# kappa_extrapolated=" + g17(rep.kappa_extrapolated) + "\n";
  csv += "# quadratic_coeffs=" + g17(rep.quadratic_coeffs[0]) + "," +
         g17(rep.quadratic_coeffs[1]) + "," + g17(rep.quadratic_coeffs[2]) +
         "\n";
  csv += "n,m,trials_requested,trials_used,solver_failures,nonconverged,"
         "mean_sparsity,std_error,fit_residual\n";
  for (std::size_t i = 0; i < rep.per_n.size(); ++i) {
    const auto& s = rep.per_n[i];
    csv += std::to_string(s.n) + "," + std::to_string(s.m) + "," +
           std::to_string(s.trials_requested) + "," +
           std::to_string(s.trials_used) + "," +
           std::to_string(s.solver_failures) + "," +
           std::to_string(s.nonconverged) + "," + g17(s.mean_sparsity) + "," +
           g17(s.std_error) + "," + g17(row_residual[i]) + "\n";
  }

  const std::string out = resolve_out(c);
  return emit("extrapolate", cfg, resolve_format(c, out, "json"), out, report,
              csv);
}

struct QqOpts {
  CommonOpts common;
  std::optional<double> alpha;
  std::optional<double> kappa;
  std::optional<long long> n;
  std::optional<int> trials;
  std::optional<int> table_points;
  std::optional<std::string> kind;
};

int run_qq(QqOpts& o) {
  const CommonOpts& c = o.common;
  const double alpha = pick(o.alpha, c, "alpha");
  const double kappa = pick(o.kappa, c, "kappa");
  const long long n = pick(o.n, c, "n", 1000LL);
  const int trials = pick(o.trials, c, "trials", 100);
  const int table_points = pick(o.table_points, c, "table-points", 256);
  const auto kind = pick_kind(o.kind, c);
  const std::uint64_t seed = resolve_seed(c);
  const int jobs = pick(o.common.jobs, c, "jobs", 0);

  const swn::experiments::QqReport rep = swn::experiments::qq_experiment(
      alpha, kappa, static_cast<Eigen::Index>(n), trials, seed, jobs, kind,
      table_points);

  ordered_json cfg;
  cfg["alpha"] = alpha;
  cfg["kappa"] = kappa;
  cfg["n"] = n;
  cfg["trials"] = trials;
  cfg["table-points"] = table_points;
  cfg["kind"] = swn::ensembles::to_string(kind);
  cfg["seed"] = seed;

  ordered_json report;
  report["n"] = rep.n;
  report["m"] = rep.m;
  report["pooled_count"] = rep.pooled_count;
  report["sample_mean"] = rep.sample_mean;
  report["mean_std_error"] = rep.mean_std_error;
  report["sample_variance"] = rep.sample_variance;
  report["second_moment_theory"] = rep.second_moment_theory;
  report["ks_vs_measured"] = rep.ks_vs_measured;
  report["ks_vs_std_normal"] = rep.ks_vs_std_normal;
  ordered_json table = ordered_json::array();
  for (const auto& r : rep.table) {
    ordered_json row;
    row["prob"] = r.prob;
    row["empirical"] = r.empirical;
    row["quantile_std_normal"] = r.quantile_std_normal;
    row["quantile_theory"] = r.quantile_theory;
    table.push_back(row);
  }
  report["table"] = table;

  std::string csv;
  csv += "# pooled_count=" + std::to_string(rep.pooled_count) + "\n";
  csv += "# sample_mean=" + g17(rep.sample_mean) + "\n";
  csv += "# mean_std_error=" + g17(rep.mean_std_error) + "\n";
  csv += "# sample_variance=" + g17(rep.sample_variance) + "\n";
  csv += "# second_moment_theory=" + g17(rep.second_moment_theory) + "\n";
  csv += "# ks_vs_measured=" + g17(rep.ks_vs_measured) + "\n";
  csv += "# ks_vs_std_normal=" + g17(rep.ks_vs_std_normal) + "\n";
  csv += "prob,empirical,quantile_std_normal,quantile_theory\n";
  for (const auto& r : rep.table)
    csv += g17(r.prob) + "," + g17(r.empirical) + "," +
           g17(r.quantile_std_normal) + "," + g17(r.quantile_theory) + "\n";

  const std::string out = resolve_out(c);
  return emit("qq", cfg, resolve_format(c, out, "csv"), out, report, csv);
}

struct EnergyScanOpts {
  CommonOpts common;
  std::optional<double> alpha;
  std::optional<double> kappa;
  std::optional<std::string> n_list;
  std::optional<int> trials;
  std::optional<std::string> kind;
};

int run_energy_scan(EnergyScanOpts& o) {
  const CommonOpts& c = o.common;
  const double alpha = pick(o.alpha, c, "alpha");
  const double kappa = pick(o.kappa, c, "kappa");
  const std::vector<Eigen::Index> n_list =
      pick_n_list(o.n_list, c, "n-list", "12,16");
  const int trials = pick(o.trials, c, "trials", 500);
  const auto kind = pick_kind(o.kind, c);
  const std::uint64_t seed = resolve_seed(c);
  const int jobs = pick(o.common.jobs, c, "jobs", 0);

  const swn::experiments::EnergyScanReport rep =
      swn::experiments::converse_energy_experiment(alpha, kappa, n_list, trials,
                                                   seed, jobs, kind);

  ordered_json cfg;
  cfg["alpha"] = alpha;
  cfg["kappa"] = kappa;
  {
    std::string nl;
    for (std::size_t i = 0; i < n_list.size(); ++i) {
      if (i) nl += ",";
      nl += std::to_string(n_list[i]);
    }
    cfg["n-list"] = nl;
  }
  cfg["trials"] = trials;
  cfg["kind"] = swn::ensembles::to_string(kind);
  cfg["seed"] = seed;

  ordered_json report;
  report["theory_min_energy"] = rep.theory_min_energy;
  report["achievable"] = rep.achievable;
  ordered_json rows = ordered_json::array();
  for (const auto& r : rep.rows) {
    ordered_json row;
    row["n"] = r.n;
    row["m"] = r.m;
    row["k"] = r.k;
    row["trials"] = r.trials;
    row["mean_energy"] = r.mean_energy;
    row["std_error"] = r.std_error;
    row["theory"] = r.theory;
    row["kappa_eff"] = r.kappa_eff;
    row["theory_eff"] = r.theory_eff;
    rows.push_back(row);
  }
  report["rows"] = rows;

  std::string csv;
  csv += "# theory_min_energy=" + g17(rep.theory_min_energy) + "\n";
  csv += std::string("# achievable=") + (rep.achievable ? "true" : "false") +
         "\n";
  csv += "n,m,k,trials,mean_energy,std_error,theory,kappa_eff,theory_eff\n";
  for (const auto& r : rep.rows)
    csv += std::to_string(r.n) + "," + std::to_string(r.m) + "," +
           std::to_string(r.k) + "," + std::to_string(r.trials) + "," +
           g17(r.mean_energy) + "," + g17(r.std_error) + "," + g17(r.theory) +
           "," + g17(r.kappa_eff) + "," + g17(r.theory_eff) + "\n";

  const std::string out = resolve_out(c);
  return emit("energy-scan", cfg, resolve_format(c, out, "csv"), out, report,
              csv);
}

struct CsRegionOpts {
  CommonOpts common;
  std::optional<double> alpha;
  std::optional<double> kappa_x;
};

ordered_json cs_outcome_region_json(const swn::experiments::CsOutcome& out) {
  ordered_json report;
  report["alpha"] = out.alpha;
  report["kappa_x"] = out.kappa_x;
  report["kappa_star"] = out.kappa_star;
  report["noisy_bound"] = out.noisy_bound;
  report["decodable"] = out.decodable;
  report["noiseless_decodable"] = out.noiseless_decodable;
  report["kappa0"] = out.kappa0;
  return report;
}

int run_cs_region(CsRegionOpts& o) {
  const CommonOpts& c = o.common;
  const double alpha = pick(o.alpha, c, "alpha");
  const double kappa_x = pick(o.kappa_x, c, "kappa-x");

  const swn::experiments::CsOutcome out = swn::experiments::cs_region(alpha, kappa_x);

  ordered_json cfg;
  cfg["alpha"] = alpha;
  cfg["kappa-x"] = kappa_x;
  cfg["seed"] = resolve_seed(c);

  const ordered_json report = cs_outcome_region_json(out);

  std::string csv =
      "alpha,kappa_x,kappa_star,noisy_bound,decodable,noiseless_decodable,"
      "kappa0\n";
  csv += g17(out.alpha) + "," + g17(out.kappa_x) + "," + g17(out.kappa_star) +
         "," + g17(out.noisy_bound) + "," + (out.decodable ? "true" : "false") +
         "," + (out.noiseless_decodable ? "true" : "false") + "," +
         g17(out.kappa0) + "\n";

  const std::string out_path = resolve_out(c);
  return emit("cs-region", cfg, resolve_format(c, out_path, "json"), out_path,
              report, csv);
}

struct CsMseOpts {
  CommonOpts common;
  std::optional<double> alpha;
  std::optional<double> kappa_x;
  std::optional<double> snr;
  std::optional<long long> n;
  std::optional<int> trials;
  std::optional<std::string> kind;
};

int run_cs_mse(CsMseOpts& o) {
  const CommonOpts& c = o.common;
  const double alpha = pick(o.alpha, c, "alpha");
  const double kappa_x = pick(o.kappa_x, c, "kappa-x");
  const double snr = pick(o.snr, c, "snr");
  const long long n = pick(o.n, c, "n", 400LL);
  const int trials = pick(o.trials, c, "trials", 200);
  const auto kind = pick_kind(o.kind, c);
  const std::uint64_t seed = resolve_seed(c);
  const int jobs = pick(o.common.jobs, c, "jobs", 0);

  const swn::experiments::CsOutcome out = swn::experiments::cs_mse_experiment(
      alpha, kappa_x, snr, static_cast<Eigen::Index>(n), trials, seed, jobs,
      kind);

  ordered_json cfg;
  cfg["alpha"] = alpha;
  cfg["kappa-x"] = kappa_x;
  cfg["snr"] = snr;
  cfg["n"] = n;
  cfg["trials"] = trials;
  cfg["kind"] = swn::ensembles::to_string(kind);
  cfg["seed"] = seed;

  ordered_json report = cs_outcome_region_json(out);
  report["snr"] = out.snr;
  report["n"] = out.n;
  report["m"] = out.m;
  report["k_x"] = out.k_x;
  report["k0"] = out.k0;
  report["trials"] = out.trials;
  report["trials_used"] = out.trials_used;
  report["rank_failures"] = out.rank_failures;
  report["mse_measured"] = out.mse_measured;
  report["mse_paper"] = out.mse_paper;
  report["mse_wishart"] = out.mse_wishart;
  report["mse_ratio_to_paper"] = out.mse_ratio_to_paper;

  std::string csv =
      "alpha,kappa_x,snr,n,m,k_x,k0,trials,trials_used,rank_failures,"
      "mse_measured,mse_paper,mse_wishart,mse_ratio_to_paper,kappa_star,"
      "kappa0\n";
  csv += g17(out.alpha) + "," + g17(out.kappa_x) + "," + g17(out.snr) + "," +
         std::to_string(out.n) + "," + std::to_string(out.m) + "," +
         std::to_string(out.k_x) + "," + std::to_string(out.k0) + "," +
         std::to_string(out.trials) + "," + std::to_string(out.trials_used) +
         "," + std::to_string(out.rank_failures) + "," +
         g17(out.mse_measured) + "," + g17(out.mse_paper) + "," +
         g17(out.mse_wishart) + "," + g17(out.mse_ratio_to_paper) + "," +
         g17(out.kappa_star) + "," + g17(out.kappa0) + "\n";

  const std::string out_path = resolve_out(c);
  return emit("cs-mse", cfg, resolve_format(c, out_path, "json"), out_path,
              report, csv);
}

struct CurveOpts {
  CommonOpts common;
  std::optional<std::string> grid;
};

int run_curve(CurveOpts& o) {
  const CommonOpts& c = o.common;
  const std::string grid_spec =
      pick(o.grid, c, "grid", std::string("0.01:0.99:0.01"));
  const std::vector<double> grid = parse_grid(grid_spec);

  const std::vector<swn::experiments::CurveRow> rows =
      swn::experiments::threshold_curve(grid);

  ordered_json cfg;
  cfg["grid"] = grid_spec;
  cfg["seed"] = resolve_seed(c);

  ordered_json table = ordered_json::array();
  std::string csv = "alpha,kappa_star,trivial\n";
  for (const auto& r : rows) {
    table.push_back(ordered_json{{"alpha", r.alpha},
                                 {"kappa_star", r.kappa_star},
                                 {"trivial", r.trivial}});
    csv += g17(r.alpha) + "," + g17(r.kappa_star) + "," + g17(r.trivial) + "\n";
  }
  ordered_json report;
  report["rows"] = std::move(table);

  const std::string out = resolve_out(c);
  return emit("curve", cfg, resolve_format(c, out, "csv"), out, report, csv);
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

int run(int argc, char** argv) {
  CLI::App app{"sparse representations of white Gaussian noise: thresholds, "
               "densities, energy laws, Monte Carlo validation"};
  app.require_subcommand(1);

  ThresholdOpts threshold_opts;
  auto* threshold_cmd = app.add_subcommand(
      "threshold", "critical sparsity/measurement thresholds at a point");
  threshold_cmd->add_option("--alpha", threshold_opts.alpha,
                            "measurement ratio in (0,1]");
  threshold_cmd->add_option("--kappa", threshold_opts.kappa,
                            "sparsity fraction in (0,1]");
  add_common_options(threshold_cmd, threshold_opts.common);

  PdfOpts pdf_opts;
  auto* pdf_cmd = app.add_subcommand(
      "pdf", "marginal density of the nonzero entries on a grid");
  pdf_cmd->add_option("--alpha", pdf_opts.alpha, "measurement ratio");
  pdf_cmd->add_option("--kappa", pdf_opts.kappa, "sparsity fraction");
  pdf_cmd->add_option("--grid", pdf_opts.grid, "zeta grid start:stop:step");
  add_common_options(pdf_cmd, pdf_opts.common);

  SampleOpts sample_opts;
  auto* sample_cmd = app.add_subcommand(
      "sample", "draw i.i.d. samples from the nonzero marginal law");
  sample_cmd->add_option("--alpha", sample_opts.alpha, "measurement ratio");
  sample_cmd->add_option("--kappa", sample_opts.kappa, "sparsity fraction");
  sample_cmd->add_option("--count", sample_opts.count, "number of samples");
  add_common_options(sample_cmd, sample_opts.common);

  SparsestOpts sparsest_opts;
  auto* sparsest_cmd = app.add_subcommand(
      "sparsest", "single IRLS sparsest-representation run on a seeded instance");
  sparsest_cmd->add_option("--n", sparsest_opts.n, "atom count");
  sparsest_cmd->add_option("--alpha", sparsest_opts.alpha, "measurement ratio");
  sparsest_cmd->add_option("--kind", sparsest_opts.kind,
                           "dictionary kind: gaussian or bernoulli")
      ->check(CLI::IsMember({"gaussian", "bernoulli"}));
  sparsest_cmd->add_option("--dump-instance", sparsest_opts.dump_instance,
                           "also write the instance as CSV to this path");
  add_irls_options(sparsest_cmd, sparsest_opts.irls);
  add_common_options(sparsest_cmd, sparsest_opts.common);

  ExtrapolateOpts extrapolate_opts;
  auto* extrapolate_cmd = app.add_subcommand(
      "extrapolate",
      "minimal-sparsity sweep over n with quadratic 1/n extrapolation");
  extrapolate_cmd->add_option("--alpha", extrapolate_opts.alpha,
                              "measurement ratio");
  extrapolate_cmd->add_option("--n-list", extrapolate_opts.n_list,
                              "comma-separated atom counts");
  extrapolate_cmd->add_option("--trials", extrapolate_opts.trials,
                              "instances per n (>= 10)");
  extrapolate_cmd->add_option("--kind", extrapolate_opts.kind,
                              "dictionary kind: gaussian or bernoulli")
      ->check(CLI::IsMember({"gaussian", "bernoulli"}));
  extrapolate_cmd->add_flag("--weighted", extrapolate_opts.weighted,
                            "weight the fit by 1/SE^2");
  add_irls_options(extrapolate_cmd, extrapolate_opts.irls);
  add_common_options(extrapolate_cmd, extrapolate_opts.common);

  QqOpts qq_opts;
  auto* qq_cmd = app.add_subcommand(
      "qq", "distribution check of synthesized observations (QQ table, KS)");
  qq_cmd->add_option("--alpha", qq_opts.alpha, "measurement ratio");
  qq_cmd->add_option("--kappa", qq_opts.kappa, "sparsity fraction");
  qq_cmd->add_option("--n", qq_opts.n, "atom count");
  qq_cmd->add_option("--trials", qq_opts.trials, "instances to pool");
  qq_cmd->add_option("--table-points", qq_opts.table_points,
                     "quantile table resolution");
  qq_cmd->add_option("--kind", qq_opts.kind,
                     "dictionary kind: gaussian or bernoulli")
      ->check(CLI::IsMember({"gaussian", "bernoulli"}));
  add_common_options(qq_cmd, qq_opts.common);

  EnergyScanOpts energy_opts;
  auto* energy_cmd = app.add_subcommand(
      "energy-scan",
      "exhaustive minimal-energy scan vs the limiting law (small n)");
  energy_cmd->add_option("--alpha", energy_opts.alpha, "measurement ratio");
  energy_cmd->add_option("--kappa", energy_opts.kappa, "sparsity fraction");
  energy_cmd->add_option("--n-list", energy_opts.n_list,
                         "comma-separated atom counts (each <= 24)");
  energy_cmd->add_option("--trials", energy_opts.trials, "instances per n");
  energy_cmd->add_option("--kind", energy_opts.kind,
                         "dictionary kind: gaussian or bernoulli")
      ->check(CLI::IsMember({"gaussian", "bernoulli"}));
  add_common_options(energy_cmd, energy_opts.common);

  CsRegionOpts region_opts;
  auto* region_cmd = app.add_subcommand(
      "cs-region", "noisy compressed-sensing decodable-region geometry");
  region_cmd->add_option("--alpha", region_opts.alpha, "measurement ratio");
  region_cmd->add_option("--kappa-x", region_opts.kappa_x,
                         "signal sparsity fraction");
  add_common_options(region_cmd, region_opts.common);

  CsMseOpts mse_opts;
  auto* mse_cmd = app.add_subcommand(
      "cs-mse", "oracle-support least-squares MSE on the Gaussian channel");
  mse_cmd->add_option("--alpha", mse_opts.alpha, "measurement ratio");
  mse_cmd->add_option("--kappa-x", mse_opts.kappa_x, "signal sparsity fraction");
  mse_cmd->add_option("--snr", mse_opts.snr, "signal-to-noise ratio (> 0)");
  mse_cmd->add_option("--n", mse_opts.n, "unknown count");
  mse_cmd->add_option("--trials", mse_opts.trials, "Monte Carlo trials");
  mse_cmd->add_option("--kind", mse_opts.kind,
                      "dictionary kind: gaussian or bernoulli")
      ->check(CLI::IsMember({"gaussian", "bernoulli"}));
  add_common_options(mse_cmd, mse_opts.common);

  CurveOpts curve_opts;
  auto* curve_cmd = app.add_subcommand(
      "curve", "sparsity-threshold curve over an alpha grid");
  curve_cmd->add_option("--grid", curve_opts.grid, "alpha grid start:stop:step");
  add_common_options(curve_cmd, curve_opts.common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  auto finish = [](CommonOpts& c) {
    c.config = load_config(c.config_path);
  };
  if (threshold_cmd->parsed()) {
    finish(threshold_opts.common);
    return run_threshold(threshold_opts);
  }
  if (pdf_cmd->parsed()) {
    finish(pdf_opts.common);
    return run_pdf(pdf_opts);
  }
  if (sample_cmd->parsed()) {
    finish(sample_opts.common);
    return run_sample(sample_opts);
  }
  if (sparsest_cmd->parsed()) {
    finish(sparsest_opts.common);
    return run_sparsest(sparsest_opts);
  }
  if (extrapolate_cmd->parsed()) {
    finish(extrapolate_opts.common);
    return run_extrapolate(extrapolate_opts);
  }
  if (qq_cmd->parsed()) {
    finish(qq_opts.common);
    return run_qq(qq_opts);
  }
  if (energy_cmd->parsed()) {
    finish(energy_opts.common);
    return run_energy_scan(energy_opts);
  }
  if (region_cmd->parsed()) {
    finish(region_opts.common);
    return run_cs_region(region_opts);
  }
  if (mse_cmd->parsed()) {
    finish(mse_opts.common);
    return run_cs_mse(mse_opts);
  }
  if (curve_cmd->parsed()) {
    finish(curve_opts.common);
    return run_curve(curve_opts);
  }
  return 2;
}

} // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "domain error: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "domain error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 4;
  }
}
