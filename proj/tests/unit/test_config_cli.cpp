#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "promot/cli.hpp"
#include "promot/config.hpp"
#include "promot/error.hpp"
#include "promot/verify.hpp"

#ifndef PROMOT_SOURCE_DIR
#error "PROMOT_SOURCE_DIR must be defined"
#endif

using namespace promot;
namespace fs = std::filesystem;

namespace {

const fs::path kPresets = fs::path(PROMOT_SOURCE_DIR) / "presets";

const std::string kBase = R"(
objective = { name = "ackley", dimension = 4 }
init = { mean = 2.0, stddev = 0.01 }
method = { id = "promot_loo", eta0 = 0.5, sigma = 0.5 }
kernel = { name = "logistic" }
transform = { family = "power_exp_hybrid", theta = 1.0, c = 600.0, beta = 10.0 }
schedule = { kind = "constant" }
batch = 10
iterations = 20
seeds = [3, 4]
)";

std::string config_error_path(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.path();
  }
  return "<no error>";
}

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "promot");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return cli_main(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("promot_cli_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST_CASE("parses a full config") {
  const ExperimentConfig c = parse_config(kBase);
  CHECK(c.experiment.objective == "ackley");
  CHECK(c.experiment.dimension == 4);
  CHECK(c.experiment.method.method == Method::kPromotLoo);
  CHECK(*c.experiment.method.eta0 == 0.5);
  CHECK(c.experiment.method.transform == Transform::power_exp_hybrid(1.0, 600.0, 10.0));
  CHECK(c.experiment.seeds == std::vector<std::uint64_t>{3, 4});
  CHECK_FALSE(c.grid);
  CHECK(parse_config(kBase + "\n[sweep]\neta0 = [0.1, 0.5]\n").grid->eta0.size() == 2);
}

TEST_CASE("config errors name the field") {
  CHECK(config_error_path(kBase + "colour = 3\n") == "colour");
  std::string neg = kBase;
  neg.replace(neg.find("theta = 1.0"), 11, "theta = -1.0");
  CHECK(config_error_path(neg) == "transform.theta");
  std::string typo = kBase;
  typo.replace(typo.find("sigma = 0.5"), 11, "sigmaa = 0.5");
  CHECK(config_error_path(typo) == "method.sigmaa");
  std::string kern = kBase;
  kern.replace(kern.find("logistic"), 8, "triangle");
  CHECK(config_error_path(kern) == "kernel");
  CHECK(config_error_path(kBase + "[sweep]\nsigma = []\n") == "sweep.sigma");
  CHECK(config_error_path("objective = [") == "");
}

TEST_CASE("every shipped preset validates") {
  std::size_t n = 0;
  for (const fs::path dir : {kPresets, kPresets / "full"}) {
    for (const auto& e : fs::directory_iterator(dir)) {
      if (e.path().extension() != ".toml") continue;
      CAPTURE(e.path().string());
      CHECK_NOTHROW(load_config(e.path()));
      ++n;
    }
  }
  CHECK(n >= 48);
  const ExperimentConfig c = load_config(kPresets / "ackley_promot.toml");
  CHECK(*c.experiment.method.eta0 == 0.5);
  CHECK(c.experiment.method.sigma == 0.5);
  CHECK(c.experiment.method.transform.theta() == 5.0);
  CHECK(c.experiment.dimension == 50);
  CHECK(c.experiment.seeds.size() == 10);
  CHECK(load_config(kPresets / "full" / "ackley_promot.toml").experiment.dimension == 500);
}

TEST_CASE("run writes summaries and byte-identical trajectories") {
  const fs::path dir = scratch("run");
  std::ofstream(dir / "c.toml") << kBase;
  REQUIRE(cli({"run", (dir / "c.toml").string(), "-o", (dir / "a").string()}) == 0);
  REQUIRE(cli({"run", (dir / "c.toml").string(), "-o", (dir / "b").string(), "--jobs", "2"}) == 0);
  const std::string summary = slurp(dir / "a" / "summary.json");
  for (const char* key : {"\"mse\"", "\"hitting_time\"", "\"best_value\""}) CHECK(summary.find(key) != std::string::npos);
  for (const char* name : {"trajectory_seed3.csv", "trajectory_seed4.csv"}) {
    const std::string a = slurp(dir / "a" / name);
    CHECK_FALSE(a.empty());
    CHECK(a == slurp(dir / "b" / name));
  }
  CHECK(cli({"run", (dir / "c.toml").string(), "-o", (dir / "s").string(), "--seed", "3"}) == 0);
  CHECK(slurp(dir / "s" / "trajectory_seed3.csv") == slurp(dir / "a" / "trajectory_seed3.csv"));
  fs::remove_all(dir);
}

TEST_CASE("exit codes") {
  const fs::path dir = scratch("codes");
  std::string neg = kBase;
  neg.replace(neg.find("theta = 1.0"), 11, "theta = -1.0");
  std::ofstream(dir / "neg.toml") << neg;
  CHECK(cli({"run", (dir / "neg.toml").string(), "-o", (dir / "x").string()}) == 2);
  CHECK(cli({"run", (dir / "missing.toml").string()}) == 2);
  CHECK(cli({"frobnicate"}) == 2);
  std::string diverge = kBase;
  diverge.replace(diverge.find("eta0 = 0.5"), 10, "eta0 = 1e12");
  diverge.replace(diverge.find("\"promot_loo\""), 12, "\"zo_sgd\"");
  std::ofstream(dir / "div.toml") << diverge;
  CHECK(cli({"run", (dir / "div.toml").string(), "-o", (dir / "d").string()}) == 3);
  CHECK(cli({"sweep", (dir / "neg.toml").string()}) == 2);
  fs::remove_all(dir);
}

TEST_CASE("landscape command") {
  const fs::path dir = scratch("land");
  CHECK(cli({"landscape", "--points", "0", "-o", dir.string()}) == 2);
  REQUIRE(cli({"landscape", "--theta", "10", "--sigma", "2,2.5,3,3.5", "--points", "41", "-o", dir.string()}) == 0);
  const std::string csv = slurp(dir / "landscape.csv");
  CHECK(csv.substr(0, csv.find('\n')) == "mu,f,G_theta10_sigma2,G_theta10_sigma2.5,G_theta10_sigma3,G_theta10_sigma3.5");
  fs::remove_all(dir);
}

TEST_CASE("verify command filters suites") {
  CHECK(cli({"verify", "--suite", "constants"}) == 0);
  CHECK(cli({"verify", "--suite", "nonsense"}) == 2);
}

TEST_CASE("a wrong curvature constant fails the constants suite and names the kernel") {
  auto exp = reference_expectations();
  for (auto& e : exp) {
    if (e.kernel == Kernel::logistic()) e.curvature = 0.5;
  }
  const SuiteReport r = verify_constants(exp);
  CHECK_FALSE(r.passed());
  CHECK(r.failures() == 1);
  for (const Check& c : r.checks) {
    if (!c.passed) CHECK(c.name.find("logistic") != std::string::npos);
  }
  CHECK(verify_constants(reference_expectations()).passed());
}

TEST_CASE("quick verification suites pass") {
  VerifyOptions o;
  for (const std::string& name : suite_names()) {
    CAPTURE(name);
    CHECK(run_suite(name, o).passed());
  }
}
