#include "promot/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "promot/config.hpp"
#include "promot/error.hpp"
#include "promot/harness.hpp"
#include "promot/verify.hpp"

namespace promot {
namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitAborted = 3;

constexpr const char* kOutputEnv = "PROMOT_OUTPUT_DIR";

void report_error(const std::string& kind, const std::string& message, const std::string& path = "") {
  ordered_json err;
  err["error"] = kind;
  if (!path.empty()) err["path"] = path;
  err["message"] = message;
  std::cerr << err.dump() << "\n";
}

struct CommonOptions {
  std::optional<std::uint64_t> seed;
  std::size_t jobs = 1;
  std::string output;
};

// --output wins. Otherwise the config's output_dir (or `fallback`) is taken
// relative to $PROMOT_OUTPUT_DIR, or to ./results when that is unset.
fs::path resolve_output(const CommonOptions& opts, const fs::path& configured, const std::string& fallback) {
  if (!opts.output.empty()) return opts.output;
  const char* env = std::getenv(kOutputEnv);
  const fs::path root = env && *env ? fs::path(env) : fs::path("results");
  return root / (configured.empty() ? fs::path(fallback) : configured);
}

// --seed S replaces the configured seeds with S, S+1, ... keeping the count.
void apply_seed(ExperimentSpec& spec, const std::optional<std::uint64_t>& seed) {
  if (!seed) return;
  const std::size_t n = spec.seeds.size();
  spec.seeds.clear();
  for (std::size_t i = 0; i < n; ++i) spec.seeds.push_back(*seed + i);
}

std::map<std::string, std::string> run_meta(const ExperimentConfig& cfg) {
  const ExperimentSpec& s = cfg.experiment;
  return {{"description", cfg.description},
          {"objective", s.objective},
          {"dimension", std::to_string(s.dimension)},
          {"method", std::string(method_name(s.method.method))},
          {"config", s.method.describe()},
          {"iterations", std::to_string(s.iterations)},
          {"seeds", std::to_string(s.seeds.size())}};
}

int cmd_run(const std::string& config_path, const CommonOptions& opts) {
  ExperimentConfig cfg = load_config(config_path);
  apply_seed(cfg.experiment, opts.seed);
  const fs::path out = resolve_output(opts, cfg.output_dir, fs::path(config_path).stem().string());
  fs::create_directories(out);

  const ProtocolResult result = run_protocol(cfg.experiment, opts.jobs, true);
  for (std::size_t i = 0; i < result.runs.size(); ++i) {
    if (result.runs[i].aborted) continue;
    atomic_write(out / fmt::format("trajectory_seed{}.csv", result.runs[i].seed),
                 trajectory_csv(result.trajectories[i], cfg.write_mu));
  }
  atomic_write(out / "runs.csv", runs_csv({result}));
  atomic_write(out / "summary.json", summary_json({result}, run_meta(cfg)));

  std::cout << fmt::format("{}: mse {}  hitting_time {}  best_value {}  ({} seeds, {} aborted) -> {}\n",
                           result.label, format_summary(result.mse), format_summary(result.hitting_time),
                           format_summary(result.best_value), result.runs.size(), result.aborted,
                           out.string());
  if (result.aborted > 0) {
    for (const RunResult& r : result.runs) {
      if (r.aborted) report_error("aborted", r.reason, fmt::format("seed {}", r.seed));
    }
    return kExitAborted;
  }
  return 0;
}

int cmd_sweep(const std::string& config_path, const CommonOptions& opts) {
  ExperimentConfig cfg = load_config(config_path);
  if (!cfg.grid) throw ConfigError("sweep", "missing required table");
  apply_seed(cfg.experiment, opts.seed);
  const fs::path out = resolve_output(opts, cfg.output_dir, fs::path(config_path).stem().string() + "_sweep");
  fs::create_directories(out);

  const SweepResult result = sweep(cfg.experiment, *cfg.grid, opts.jobs);
  atomic_write(out / "sweep_runs.csv", runs_csv(result.results));
  auto meta = run_meta(cfg);
  meta["selected"] = result.configs.at(result.selected).describe();
  atomic_write(out / "sweep_summary.json", summary_json(result.results, meta));

  for (std::size_t i = 0; i < result.results.size(); ++i) {
    const ProtocolResult& r = result.results[i];
    std::cout << fmt::format("{:>3}  {:<40} mse {}  aborted {}\n", i + 1, result.configs[i].describe(),
                             format_summary(r.mse), r.aborted);
  }
  std::cout << "selected: " << meta["selected"] << "\n";
  return 0;
}

struct LandscapeOptions {
  std::string kernel = "logistic";
  std::optional<double> kernel_param;
  std::string transform = "exponential";
  double c = 0.0;
  double beta = 0.0;
  double alpha = 1.0;
  std::vector<double> thetas{10.0};
  std::vector<double> sigmas{2.0, 2.5, 3.0, 3.5};
  double lo = -30.0;
  double hi = 30.0;
  std::size_t points = 601;
};

int cmd_landscape(const LandscapeOptions& lo, const CommonOptions& opts) {
  if (lo.points < 2) throw ConfigError("points", "grid needs at least 2 points");
  if (!(lo.hi > lo.lo)) throw ConfigError("hi", "upper end must exceed lower end");
  for (double s : lo.sigmas) {
    if (!(s > 0.0)) throw ConfigError("sigma", "must be positive");
  }
  for (double t : lo.thetas) {
    if (!(t > 0.0)) throw ConfigError("theta", "must be positive");
  }
  Kernel kernel = Kernel::logistic();
  try {
    kernel = Kernel::from_name(lo.kernel, lo.kernel_param);
  } catch (const Error& e) {
    throw ConfigError("kernel", e.what());
  }
  Transform transform = Transform::identity();
  try {
    TransformParams params;
    params.c = lo.c;
    params.beta = lo.beta;
    params.alpha = lo.alpha;
    transform = Transform(Transform::family_from_name(lo.transform), lo.thetas.front(), params);
  } catch (const Error& e) {
    throw ConfigError("transform", e.what());
  }
  const LandscapeTable table = landscape_table(kernel, transform, lo.thetas, lo.sigmas, lo.lo, lo.hi, lo.points);
  const fs::path out = resolve_output(opts, {}, "landscape");
  fs::create_directories(out);
  atomic_write(out / "landscape.csv", table.csv());
  std::cout << fmt::format("{} columns on {} points -> {}\n", table.columns.size(), table.mu.size(),
                           (out / "landscape.csv").string());
  for (const std::string& col : table.failed) {
    report_error("quadrature", "column failed to reach the requested accuracy", col);
  }
  return table.failed.empty() ? 0 : kExitFailure;
}

int cmd_verify(const std::vector<std::string>& suites, bool full, const CommonOptions& opts) {
  VerifyOptions vo;
  vo.full = full;
  if (opts.seed) vo.seed = *opts.seed;
  const std::vector<std::string> names = suites.empty() ? suite_names() : suites;
  bool all = true;
  for (const std::string& name : names) {
    const SuiteReport report = run_suite(name, vo);
    std::cout << fmt::format("[{}] {} ({} checks, {:.1f} s)\n", report.passed() ? "PASS" : "FAIL",
                             report.suite, report.checks.size(), report.seconds);
    for (const Check& c : report.checks) {
      std::cout << fmt::format("  {} {}: measured {:.6g}, expected {:.6g}{}\n", c.passed ? "ok  " : "FAIL",
                               c.name, c.measured, c.expected, c.detail.empty() ? "" : "  " + c.detail);
    }
    all = all && report.passed();
  }
  return all ? 0 : kExitFailure;
}

int cmd_attack(const std::string& config_path, const CommonOptions& opts) {
  const ExperimentConfig cfg = load_config(config_path);
  if (!cfg.attack) throw ConfigError("attack", "missing required table");
  const std::uint64_t seed = opts.seed.value_or(cfg.experiment.seeds.front());
  const fs::path out = resolve_output(opts, cfg.output_dir, fs::path(config_path).stem().string());
  fs::create_directories(out);

  const AttackReport report = run_attacks(*cfg.attack, seed, opts.jobs);
  std::string csv = "input,target,success,first_success,r_squared,linf,aborted,reason\n";
  ordered_json root;
  root["schema_version"] = kSchemaVersion;
  root["method"] = std::string(method_name(cfg.attack->method.method));
  root["config"] = cfg.attack->method.describe();
  root["seed"] = seed;
  root["success_rate"] = report.success_rate;
  root["r_squared"] = {{"mean", report.r_squared.mean}, {"std", report.r_squared.stddev}};
  root["linf"] = {{"mean", report.linf.mean}, {"std", report.linf.stddev}};
  std::size_t aborted = 0;
  for (const AttackOutcome& o : report.outcomes) {
    csv += fmt::format("{},{},{},{},{:.17g},{:.17g},{},{}\n", o.input, o.target, o.success ? 1 : 0,
                       o.first_success, o.r_squared, o.linf, o.aborted ? 1 : 0, o.reason);
    aborted += o.aborted ? 1 : 0;
  }
  atomic_write(out / "attacks.csv", csv);
  atomic_write(out / "attack_summary.json", root.dump(2) + "\n");
  std::cout << fmt::format("success rate {:.2f}  R2 {}  linf {}  ({} inputs) -> {}\n", report.success_rate,
                           format_summary(report.r_squared), format_summary(report.linf),
                           report.outcomes.size(), out.string());
  return aborted > 0 ? kExitAborted : 0;
}

void add_common(CLI::App* app, CommonOptions& opts) {
  app->add_option("--seed", opts.seed, "Base seed");
  app->add_option("--jobs", opts.jobs, "Worker threads")->check(CLI::PositiveNumber);
  app->add_option("-o,--output", opts.output, "Output directory");
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"ProMoT zeroth-order optimization experiments"};
  app.require_subcommand(1);

  CommonOptions opts;
  std::string config_path;

  CLI::App* run = app.add_subcommand("run", "Run one experiment from a config file");
  run->add_option("config", config_path, "Config file")->required();
  add_common(run, opts);

  CLI::App* sw = app.add_subcommand("sweep", "Evaluate the [sweep] grid of a config file");
  sw->add_option("config", config_path, "Config file")->required();
  add_common(sw, opts);

  LandscapeOptions lo;
  CLI::App* land = app.add_subcommand("landscape", "Export smoothed 1-D landscape curves");
  land->add_option("--kernel", lo.kernel, "Kernel name");
  land->add_option("--kernel-param", lo.kernel_param, "Kernel shape parameter (nu or beta)");
  land->add_option("--transform", lo.transform, "Transform family");
  land->add_option("--c", lo.c, "Transform offset c");
  land->add_option("--beta", lo.beta, "Transform exponent beta");
  land->add_option("--alpha", lo.alpha, "Transform alpha");
  land->add_option("--theta", lo.thetas, "Theta values")->delimiter(',');
  land->add_option("--sigma", lo.sigmas, "Sigma values")->delimiter(',');
  land->add_option("--lo", lo.lo, "Grid start");
  land->add_option("--hi", lo.hi, "Grid end");
  land->add_option("--points", lo.points, "Grid size");
  add_common(land, opts);

  std::vector<std::string> suites;
  bool full = false;
  CLI::App* ver = app.add_subcommand("verify", "Run the verification suites");
  ver->add_option("--suite", suites, "Suite to run (repeatable)")->check(CLI::IsMember(suite_names()));
  ver->add_flag("--full", full, "Use full sample sizes");
  ver->add_option("--seed", opts.seed, "Base seed");

  CLI::App* atk = app.add_subcommand("attack", "Run black-box attacks from a config file with an [attack] table");
  atk->add_option("config", config_path, "Config file")->required();
  add_common(atk, opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    report_error("usage", e.what());
    return kExitConfig;
  }
  if (opts.jobs == 0) opts.jobs = 1;

  try {
    if (*run) return cmd_run(config_path, opts);
    if (*sw) return cmd_sweep(config_path, opts);
    if (*land) return cmd_landscape(lo, opts);
    if (*ver) return cmd_verify(suites, full, opts);
    if (*atk) return cmd_attack(config_path, opts);
  } catch (const ConfigError& e) {
    report_error("config", e.what(), e.path());
    return kExitConfig;
  } catch (const RunAborted& e) {
    report_error("aborted", e.what());
    return kExitAborted;
  } catch (const std::exception& e) {
    report_error("internal", e.what());
    return kExitFailure;
  }
  return kExitFailure;
}

}  // namespace promot
