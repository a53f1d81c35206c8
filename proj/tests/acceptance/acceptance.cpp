// Prints one PASS/FAIL line per acceptance criterion. Exit status is the
// number of failed criteria (0 when all pass).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <limits>
#include <numbers>
#include <string>
#include <thread>
#include <vector>

#include <fmt/format.h>

#include "promot/config.hpp"
#include "promot/harness.hpp"
#include "promot/verify.hpp"

#ifndef PROMOT_SOURCE_DIR
#error "PROMOT_SOURCE_DIR must be defined"
#endif
#ifndef PROMOT_CLI_PATH
#error "PROMOT_CLI_PATH must be defined"
#endif

using namespace promot;
namespace fs = std::filesystem;

namespace {

const fs::path kPresets = fs::path(PROMOT_SOURCE_DIR) / "presets";

struct Outcome {
  bool passed = false;
  std::string detail;
};

int failures = 0;

void criterion(int id, const std::string& title, double limit_seconds, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, fmt::format("exception: {}", e.what())};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = secs < limit_seconds;
  const bool ok = o.passed && in_time;
  if (!ok) ++failures;
  std::string detail = o.detail;
  if (!in_time) detail += fmt::format("; runtime {:.1f} s over the {:.0f} s limit", secs, limit_seconds);
  std::printf("[%s] %2d %s: %s (%.1f s)\n", ok ? "PASS" : "FAIL", id, title.c_str(), detail.c_str(), secs);
  std::fflush(stdout);
}

Outcome from_suite(const SuiteReport& r) {
  std::string detail = fmt::format("{}/{} checks", r.checks.size() - r.failures(), r.checks.size());
  for (const Check& c : r.checks) {
    if (!c.passed) detail += fmt::format("; {} measured {:.6g} expected {:.6g} {}", c.name, c.measured, c.expected, c.detail);
  }
  return {r.passed(), detail};
}

std::size_t jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

double mean_mse(const std::string& preset) {
  const ExperimentConfig c = load_config(kPresets / preset);
  const ProtocolResult r = run_protocol(c.experiment, jobs());
  if (r.aborted > 0) throw std::runtime_error(fmt::format("{}: {} aborted runs", preset, r.aborted));
  return r.mse.mean;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

int main() {
  VerifyOptions full;
  full.full = true;

  criterion(1, "kernel constants", 10.0, [] {
    // I: analytic entries; K: printed entries.
    const double pi = std::numbers::pi;
    const std::vector<KernelExpectation> table{
        {Kernel::gaussian(), 1.0, 0.96749},
        {Kernel::logistic(), 1.0 / 3.0, 0.38496},
        {Kernel::student_t(1.0), 2.0 / 4.0, 0.82691},
        {Kernel::student_t(3.0), 4.0 / 6.0, 0.87870},
        {Kernel::student_t(10.0), 11.0 / 13.0, 0.92883},
        {Kernel::hyperbolic_secant(), pi * pi / 8.0, pi / 2.0},
        {Kernel::generalized_gaussian(4.0), 16.0 * std::tgamma(1.75) / std::tgamma(0.25), 3.36400},
    };
    return from_suite(verify_constants(table));
  });
  criterion(2, "transform ratio monotonicity and boundedness", 30.0, [&] { return from_suite(verify_transforms(full)); });
  criterion(3, "estimator unbiasedness", 300.0, [&] { return from_suite(verify_unbiasedness(full)); });
  criterion(4, "second-moment bound", 120.0, [&] { return from_suite(verify_second_moment(full)); });
  criterion(5, "leave-one-out variance reduction", 300.0, [&] { return from_suite(verify_loo(full)); });
  criterion(6, "localization", 60.0, [&] { return from_suite(verify_localization(full)); });
  criterion(7, "1-D Lipschitz bound", 60.0, [&] { return from_suite(verify_lipschitz(full)); });

  criterion(8, "desk-scale benchmark ordering", 900.0, [] {
    const double ack_p = mean_mse("ackley_promot.toml");
    const double ack_l = mean_mse("ackley_promot_loo.toml");
    const double ack_e = mean_mse("ackley_epgs.toml");
    const double ros_p = mean_mse("rosenbrock_promot.toml");
    const double ros_l = mean_mse("rosenbrock_promot_loo.toml");
    const bool a1 = ack_l < ack_p, a2 = ros_l < ros_p, b = ack_l < ack_e;
    return Outcome{a1 && a2 && b,
                   fmt::format("ackley loo {:.4g} vs promot {:.4g} [{}]; rosenbrock loo {:.4g} vs promot {:.4g} [{}]; "
                               "ackley loo {:.4g} vs epgs {:.4g} [{}]",
                               ack_l, ack_p, a1 ? "ok" : "violated", ros_l, ros_p, a2 ? "ok" : "violated", ack_l, ack_e,
                               b ? "ok" : "violated")};
  });

  criterion(9, "attack objective", 300.0, [] {
    const ExperimentConfig c = load_config(kPresets / "attack_promot_loo.toml");
    const AttackSpec& spec = *c.attack;
    const AttackReport rep = run_attacks(spec, c.experiment.seeds.front(), jobs());
    const bool setup = spec.classes == 4 && spec.inputs == 20 && spec.kappa == 0.0 && spec.iterations == 500 &&
                       spec.method.batch == 30 && spec.method.method == Method::kPromotLoo;
    // Exhaustive {-1,0,1}^2 grid against an independent evaluation of the loss.
    std::size_t agree = 0, total = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const SoftmaxClassifier clf = SoftmaxClassifier::synthetic(4, 2, seed);
      Eigen::VectorXd x(2);
      x << 0.3 * static_cast<double>(seed % 3), -0.2;
      const AttackProblem p(clf, x, 0.0, 0.1);
      double best_l = -std::numeric_limits<double>::infinity(), best_o = best_l;
      int arg_l = -1, arg_o = -1;
      for (int k = 0; k < 9; ++k) {
        Eigen::VectorXd mu(2);
        mu << k / 3 - 1, k % 3 - 1;
        const Eigen::VectorXd z = clf.logits(x + mu);
        double other = -std::numeric_limits<double>::infinity();
        for (Eigen::Index y = 0; y < 4; ++y) {
          if (static_cast<std::size_t>(y) != p.target) other = std::max(other, z[y]);
        }
        const double o = -std::max(other - z[static_cast<Eigen::Index>(p.target)], 0.0) - 0.1 * mu.norm();
        const double l = p.loss(mu);
        if (l > best_l) best_l = l, arg_l = k;
        if (o > best_o) best_o = o, arg_o = k;
      }
      agree += arg_l == arg_o;
      ++total;
    }
    return Outcome{setup && rep.success_rate == 1.0 && agree == total,
                   fmt::format("success rate {:.2f} over {} inputs (T={}, B={}); grid argmax agrees on {}/{} classifiers",
                               rep.success_rate, rep.outcomes.size(), spec.iterations, spec.method.batch, agree, total)};
  });

  criterion(10, "determinism", 60.0, [] {
    const fs::path dir = fs::temp_directory_path() / "promot_acceptance_determinism";
    fs::remove_all(dir);
    const std::string preset = (kPresets / "ackley_promot_loo.toml").string();
    auto run = [&](const std::string& out, int j) {
      const std::string cmd = fmt::format("\"{}\" run \"{}\" --jobs {} -o \"{}\" > /dev/null", PROMOT_CLI_PATH, preset,
                                          j, (dir / out).string());
      return std::system(cmd.c_str());
    };
    if (run("a", 1) != 0 || run("b", 1) != 0 || run("c", 8) != 0) return Outcome{false, "cli run failed"};
    std::size_t files = 0, same = 0;
    for (const auto& e : fs::directory_iterator(dir / "a")) {
      const std::string name = e.path().filename().string();
      if (name.rfind("trajectory_", 0) != 0) continue;
      ++files;
      const std::string a = slurp(e.path());
      same += a == slurp(dir / "b" / name) && a == slurp(dir / "c" / name);
    }
    fs::remove_all(dir);
    return Outcome{files == 10 && same == files,
                   fmt::format("{}/{} trajectory CSVs byte-identical across two runs and --jobs 1 vs 8", same, files)};
  });

  std::printf("%d of 10 criteria failed\n", failures);
  return failures;
}
