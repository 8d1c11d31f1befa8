#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include <Eigen/Dense>

#include "swn/density.hpp"
#include "swn/ensembles.hpp"
#include "swn/solvers.hpp"
#include "swn/theory.hpp"

using Catch::Approx;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

fs::path work_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() /
                 ("swn-cli-tests-" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

fs::path unique_path(const std::string& name) {
  static int counter = 0;
  return work_dir() / (std::to_string(counter++) + "-" + name);
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

/// Runs the CLI through the shell; `prefix` lets tests inject environment
/// overrides (e.g. "env SWN_SEED=7").
CliResult run_cli(const std::string& args, const std::string& prefix = "") {
  const fs::path out_file = unique_path("stdout.txt");
  const fs::path err_file = unique_path("stderr.txt");
  std::string cmd = prefix.empty() ? std::string() : prefix + " ";
  cmd += std::string(SWN_CLI_PATH) + " " + args + " > " + out_file.string() +
         " 2> " + err_file.string();
  const int status = std::system(cmd.c_str());

  CliResult res;
  res.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  res.out = slurp(out_file);
  res.err = slurp(err_file);
  return res;
}

int count_data_rows(const std::string& csv) {
  // Rows after the comment block and the header line.
  std::istringstream ss(csv);
  std::string line;
  int rows = 0;
  bool seen_header = false;
  while (std::getline(ss, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!seen_header) {
      seen_header = true;
      continue;
    }
    ++rows;
  }
  return rows;
}

} // namespace

TEST_CASE("cli: threshold computes both directions") {
  SECTION("from alpha") {
    const auto res = run_cli("threshold --alpha 0.5");
    REQUIRE(res.code == 0);
    const auto doc = nlohmann::json::parse(res.out);
    CHECK(doc["tool"] == "swn");
    CHECK(doc["command"] == "threshold");
    CHECK(doc["generator"] == std::string(swn::rng::scheme));
    CHECK(doc["config"]["alpha"] == 0.5);
    const double expected = swn::theory::kappa_star(0.5).kappa_star;
    CHECK(doc["report"]["kappa_star"].get<double>() ==
          Approx(expected).margin(1e-14));
    CHECK(doc["report"]["alpha"].get<double>() == 0.5);
  }

  SECTION("from kappa") {
    const auto res = run_cli("threshold --kappa 0.1");
    REQUIRE(res.code == 0);
    const auto doc = nlohmann::json::parse(res.out);
    const double as = doc["report"]["alpha_star"].get<double>();
    CHECK(as > 0.43);
    CHECK(as < 0.45);
  }

  SECTION("csv format on request") {
    const auto res = run_cli("threshold --alpha 0.5 --format csv");
    REQUIRE(res.code == 0);
    CHECK(res.out.rfind("# swn ", 0) == 0);
    CHECK(res.out.find("# command=threshold\n") != std::string::npos);
    CHECK(res.out.find("alpha,kappa,xi,kappa_star,alpha_star\n") !=
          std::string::npos);
  }
}

TEST_CASE("cli: usage errors exit with 2") {
  CHECK(run_cli("threshold").code == 2);
  CHECK(run_cli("threshold --alpha 0.5 --kappa 0.1").code == 2);
  CHECK(run_cli("").code == 2);
  CHECK(run_cli("no-such-command").code == 2);
  CHECK(run_cli("pdf --kappa 0.1").code == 2); // missing required alpha
  CHECK(run_cli("threshold --alpha 0.5 --format xml").code == 2);
  CHECK(run_cli("curve --grid 0.9:0.1:0.1").code == 2); // empty grid
}

TEST_CASE("cli: domain violations exit with 3") {
  CHECK(run_cli("threshold --alpha 1.5").code == 3);
  CHECK(run_cli("threshold --kappa 0").code == 3);
  // alpha beyond the achievable boundary for this kappa.
  CHECK(run_cli("qq --alpha 0.5 --kappa 0.1 --n 50 --trials 5").code == 3);
  CHECK(run_cli("cs-mse --alpha 0.5 --kappa-x 0.44 --snr 10 --n 60 --trials 5")
            .code == 3);
}

TEST_CASE("cli: pdf writes a reproducible grid") {
  const fs::path out = unique_path("pdf.csv");
  const std::string args =
      "pdf --alpha 0.2 --kappa 0.1 --grid -2:2:0.5 --out " + out.string();
  REQUIRE(run_cli(args).code == 0);
  const std::string first = slurp(out);

  CHECK(first.rfind("# swn ", 0) == 0);
  CHECK(first.find("zeta,p\n") != std::string::npos);
  CHECK(count_data_rows(first) == 9);
  // The origin lies inside the spectral gap: zero density.
  CHECK(first.find("\n0,0\n") != std::string::npos);

  REQUIRE(run_cli(args).code == 0);
  CHECK(slurp(out) == first); // byte-identical rerun
}

TEST_CASE("cli: sample seeding precedence") {
  SECTION("explicit seed is deterministic") {
    const auto a = run_cli("sample --alpha 0.2 --kappa 0.1 --count 20 --seed 5");
    const auto b = run_cli("sample --alpha 0.2 --kappa 0.1 --count 20 --seed 5");
    REQUIRE(a.code == 0);
    CHECK(a.out == b.out);
    CHECK(a.out.find("# seed=5\n") != std::string::npos);
    CHECK(count_data_rows(a.out) == 20);
  }

  SECTION("environment fallback and default") {
    const auto env = run_cli("sample --alpha 0.2 --kappa 0.1 --count 3",
                             "env SWN_SEED=777");
    REQUIRE(env.code == 0);
    CHECK(env.out.find("# seed=777\n") != std::string::npos);

    const auto flag = run_cli("sample --alpha 0.2 --kappa 0.1 --count 3 --seed 9",
                              "env SWN_SEED=777");
    REQUIRE(flag.code == 0);
    CHECK(flag.out.find("# seed=9\n") != std::string::npos);

    const auto def = run_cli("sample --alpha 0.2 --kappa 0.1 --count 3",
                             "env -u SWN_SEED");
    REQUIRE(def.code == 0);
    CHECK(def.out.find("# seed=12345\n") != std::string::npos);

    const auto bad = run_cli("sample --alpha 0.2 --kappa 0.1 --count 3",
                             "env SWN_SEED=nope");
    CHECK(bad.code == 2);
  }

  SECTION("every sample lies outside the spectral gap") {
    const auto res =
        run_cli("sample --alpha 0.2 --kappa 0.1 --count 50 --seed 3");
    REQUIRE(res.code == 0);
    const double gap =
        swn::density::density_params(0.1, 0.2).gap;
    std::istringstream ss(res.out);
    std::string line;
    int checked = 0;
    while (std::getline(ss, line)) {
      if (line.empty() || line[0] == '#' || line == "value") continue;
      CHECK(std::abs(std::stod(line)) >= gap);
      ++checked;
    }
    CHECK(checked == 50);
  }
}

TEST_CASE("cli: config file overlay") {
  const fs::path cfg = unique_path("cfg.json");
  {
    std::ofstream f(cfg);
    f << R"({"alpha": 0.2, "kappa": 0.1, "count": 5, "seed": 99})";
  }

  const auto from_cfg = run_cli("sample --config " + cfg.string());
  REQUIRE(from_cfg.code == 0);
  CHECK(from_cfg.out.find("# seed=99\n") != std::string::npos);
  CHECK(count_data_rows(from_cfg.out) == 5);

  // Flags take precedence over config values.
  const auto overridden =
      run_cli("sample --config " + cfg.string() + " --count 3 --seed 1");
  REQUIRE(overridden.code == 0);
  CHECK(overridden.out.find("# seed=1\n") != std::string::npos);
  CHECK(count_data_rows(overridden.out) == 3);

  const fs::path broken = unique_path("broken.json");
  {
    std::ofstream f(broken);
    f << "{not json";
  }
  CHECK(run_cli("sample --config " + broken.string()).code == 2);
  CHECK(run_cli("sample --config /no/such/file.json").code == 2);
}

TEST_CASE("cli: sparsest solves and dumps instances") {
  const auto res = run_cli("sparsest --n 24 --alpha 0.5 --seed 7");
  REQUIRE(res.code == 0);
  const auto doc = nlohmann::json::parse(res.out);
  CHECK(doc["report"]["n"] == 24);
  CHECK(doc["report"]["m"] == 12);
  CHECK(doc["report"]["failed"] == false);

  // The residual energy respects the echoed tolerance (relative to the
  // observation energy of the same seeded instance).
  const double tol = doc["config"]["irls-energy-tol"].get<double>();
  CHECK(tol == Approx(swn::solvers::IrlsParams{}.energy_tol));
  const auto inst = swn::ensembles::draw_instance(
      24, 0.5, swn::ensembles::DictionaryKind::gaussian, 7);
  const double base = inst.omega.squaredNorm() / double(inst.m);
  CHECK(doc["report"]["energy"].get<double>() <= tol * base + 1e-12);

  const auto support = doc["report"]["support"];
  CHECK(support.size() == doc["report"]["support_size"].get<std::size_t>());
  CHECK(doc["report"]["sparsity_fraction"].get<double>() ==
        Approx(support.size() / 24.0));

  SECTION("the echoed config replays the run byte-for-byte") {
    const fs::path cfg = unique_path("replay.json");
    {
      std::ofstream f(cfg);
      f << doc["config"].dump();
    }
    const auto replay = run_cli("sparsest --config " + cfg.string());
    REQUIRE(replay.code == 0);
    CHECK(replay.out == res.out);
  }

  SECTION("csv output grows a json sidecar") {
    const fs::path out = unique_path("sol.csv");
    const fs::path dump = unique_path("inst.csv");
    const auto r = run_cli("sparsest --n 16 --alpha 0.5 --seed 7 --out " +
                           out.string() + " --dump-instance " + dump.string());
    REQUIRE(r.code == 0);
    const std::string sol = slurp(out);
    CHECK(sol.find("index,value\n") != std::string::npos);
    CHECK(count_data_rows(sol) == 16);
    const auto sidecar = nlohmann::json::parse(slurp(fs::path(out.string() + ".json")));
    CHECK(sidecar["command"] == "sparsest");
    const std::string inst = slurp(dump);
    CHECK(inst.find("# m=8,n=16,alpha=0.5,kind=gaussian,seed=7") !=
          std::string::npos);
    CHECK(inst.find("omega,") != std::string::npos);
  }

  SECTION("numerical breakdown exits with 4") {
    // A singular square Bernoulli dictionary defeats the Gram solve.
    std::uint64_t bad_seed = 0;
    bool found = false;
    for (std::uint64_t s = 0; s < 64 && !found; ++s) {
      const auto inst = swn::ensembles::draw_instance(
          2, 1.0, swn::ensembles::DictionaryKind::bernoulli, s);
      if (std::abs(inst.dictionary.determinant()) < 1e-9) {
        bad_seed = s;
        found = true;
      }
    }
    REQUIRE(found);
    const auto r = run_cli("sparsest --n 2 --alpha 1.0 --kind bernoulli --seed " +
                           std::to_string(bad_seed));
    CHECK(r.code == 4);
  }
}

TEST_CASE("cli: extrapolate output is worker-count invariant") {
  const fs::path a = unique_path("a.json");
  const fs::path b = unique_path("b.json");
  const std::string base =
      "extrapolate --alpha 0.5 --n-list 16,20,24 --trials 10 --seed 11 ";
  REQUIRE(run_cli(base + "--jobs 1 --out " + a.string()).code == 0);
  REQUIRE(run_cli(base + "--jobs 3 --out " + b.string()).code == 0);
  const std::string text_a = slurp(a);
  CHECK(text_a == slurp(b));

  const auto doc = nlohmann::json::parse(text_a);
  CHECK(doc["report"]["kappa_theory"].get<double>() ==
        Approx(swn::theory::kappa_star(0.5).kappa_star).margin(1e-14));
  CHECK(doc["report"]["per_n"].size() == 3);
  CHECK(doc["config"]["trials"] == 10);

  SECTION("csv table carries one row per n") {
    const auto csv = run_cli(base + "--format csv");
    REQUIRE(csv.code == 0);
    CHECK(csv.out.find("# kappa_extrapolated=") != std::string::npos);
    CHECK(csv.out.find("n,m,trials_requested,trials_used,solver_failures,"
                       "nonconverged,mean_sparsity,std_error,fit_residual\n") !=
          std::string::npos);
    CHECK(count_data_rows(csv.out) == 3);
  }
}

TEST_CASE("cli: qq emits aggregate statistics") {
  const auto res =
      run_cli("qq --alpha 0.2 --kappa 0.1 --n 100 --trials 50 --seed 2");
  REQUIRE(res.code == 0);
  CHECK(res.out.find("# command=qq\n") != std::string::npos);
  CHECK(res.out.find("# pooled_count=1000\n") != std::string::npos);
  CHECK(res.out.find("# sample_variance=") != std::string::npos);
  CHECK(res.out.find("# ks_vs_measured=") != std::string::npos);
  CHECK(res.out.find("prob,empirical,quantile_std_normal,quantile_theory\n") !=
        std::string::npos);
  CHECK(count_data_rows(res.out) == 256);

  const auto json_form = run_cli(
      "qq --alpha 0.2 --kappa 0.1 --n 100 --trials 50 --seed 2 --format json "
      "--table-points 16");
  REQUIRE(json_form.code == 0);
  const auto doc = nlohmann::json::parse(json_form.out);
  CHECK(doc["report"]["table"].size() == 16);
  CHECK(doc["report"]["pooled_count"] == 1000);
}

TEST_CASE("cli: energy-scan tabulates per-n means") {
  const auto res = run_cli(
      "energy-scan --alpha 0.75 --kappa 0.125 --n-list 12 --trials 30 --seed 1");
  REQUIRE(res.code == 0);
  CHECK(res.out.find("# theory_min_energy=") != std::string::npos);
  CHECK(res.out.find("# achievable=false\n") != std::string::npos);
  CHECK(res.out.find("n,m,k,trials,mean_energy,std_error,theory,"
                     "kappa_eff,theory_eff\n") != std::string::npos);
  // floor(0.125 * 12) = 1 active entry.
  CHECK(res.out.find("\n12,9,1,30,") != std::string::npos);
  CHECK(count_data_rows(res.out) == 1);
}

TEST_CASE("cli: cs-region reports the decodable geometry") {
  const auto res = run_cli("cs-region --alpha 0.5 --kappa-x 0.05");
  REQUIRE(res.code == 0);
  const auto doc = nlohmann::json::parse(res.out);
  CHECK(doc["report"]["decodable"] == true);
  CHECK(doc["report"]["noiseless_decodable"] == true);
  CHECK(doc["report"]["noisy_bound"].get<double>() == Approx(0.429).margin(2e-3));

  const auto outside = run_cli("cs-region --alpha 0.5 --kappa-x 0.44");
  REQUIRE(outside.code == 0); // asking about the region is not an error
  CHECK(nlohmann::json::parse(outside.out)["report"]["decodable"] == false);
}

TEST_CASE("cli: cs-mse runs the oracle-support experiment") {
  const auto res = run_cli(
      "cs-mse --alpha 0.5 --kappa-x 0.05 --snr 10 --n 60 --trials 10 --seed 4");
  REQUIRE(res.code == 0);
  const auto doc = nlohmann::json::parse(res.out);
  CHECK(doc["report"]["m"] == 30);
  CHECK(doc["report"]["k_x"] == 3);
  CHECK(doc["report"]["trials_used"] == 10);
  CHECK(doc["report"]["mse_measured"].get<double>() > 0.0);
  CHECK(doc["report"]["mse_wishart"].get<double>() > 0.0);
  const double ratio = doc["report"]["mse_ratio_to_paper"].get<double>();
  CHECK(ratio == Approx(doc["report"]["mse_measured"].get<double>() /
                        doc["report"]["mse_paper"].get<double>()));
}

TEST_CASE("cli: curve tabulates the threshold over a grid") {
  const auto res = run_cli("curve --grid 0.1:0.9:0.1");
  REQUIRE(res.code == 0);
  CHECK(res.out.find("alpha,kappa_star,trivial\n") != std::string::npos);
  REQUIRE(count_data_rows(res.out) == 9);

  // kappa_star column strictly increases along the grid.
  std::istringstream ss(res.out);
  std::string line;
  double prev = -1.0;
  while (std::getline(ss, line)) {
    if (line.empty() || line[0] == '#' || line[0] == 'a') continue;
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    const double ks = std::stod(line.substr(c1 + 1, c2 - c1 - 1));
    CHECK(ks > prev);
    prev = ks;
  }

  const fs::path out = unique_path("curve.json");
  REQUIRE(run_cli("curve --grid 0.2:0.4:0.1 --out " + out.string()).code == 0);
  const auto doc = nlohmann::json::parse(slurp(out)); // .json extension -> json
  CHECK(doc["report"]["rows"].size() == 3);
}
