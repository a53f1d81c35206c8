#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <filesystem>
#include <fstream>
#include <random>

#include "promot/error.hpp"
#include "promot/harness.hpp"

using namespace promot;

namespace {

Trajectory make_traj(const std::vector<double>& xs, const std::function<double(double)>& f) {
  Trajectory t;
  for (double x : xs) {
    t.mu.push_back(Eigen::VectorXd::Constant(1, x));
    t.f_mu.push_back(f(x));
    t.sigma.push_back(1.0);
    t.evaluations.push_back(t.evaluations.size());
  }
  for (std::size_t i = 1; i < xs.size(); ++i) {
    t.eta.push_back(0.1);
    t.grad_norm.push_back(1.0);
  }
  return t;
}

ExperimentSpec small_spec() {
  ExperimentSpec s;
  s.objective = "ackley";
  s.dimension = 8;
  s.init = {4.0, 0.01};
  s.method.method = Method::kPromotLoo;
  s.method.eta0 = 0.5;
  s.method.sigma = 0.5;
  s.method.batch = 10;
  s.method.transform = Transform::power_exp_hybrid(1.0, 600.0, 10.0);
  s.iterations = 30;
  s.seeds = {0, 1, 2, 3};
  return s;
}

}  // namespace

TEST_CASE("metrics examples") {
  auto f = [](double x) { return -x * x; };
  const RunResult r = compute_metrics(make_traj({3.0, 1.0, 2.0}, f), Eigen::VectorXd::Zero(1));
  CHECK(r.mse == 1.0);
  CHECK(r.hitting_time == 1);
  CHECK(r.best_value == f(1.0));
  const RunResult z = compute_metrics(make_traj({0.0, 0.0, 0.0}, f), Eigen::VectorXd::Zero(1));
  CHECK(z.mse == 0.0);
  CHECK(z.hitting_time == 0);
  // Without x* only the best observed value is reported.
  const RunResult n = compute_metrics(make_traj({3.0, 1.0, 2.0}, f), std::nullopt);
  CHECK(std::isnan(n.mse));
  CHECK(n.best_value == f(1.0));
}

TEST_CASE("metrics match an exhaustive scan") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    Trajectory t;
    const Eigen::VectorXd xs = Eigen::VectorXd::Constant(3, 0.5);
    for (int k = 0; k <= 10; ++k) {
      Eigen::VectorXd m(3);
      for (int i = 0; i < 3; ++i) m[i] = std::round(n(rng));  // ties are likely
      t.mu.push_back(m);
      t.f_mu.push_back(-m.sum());
    }
    std::size_t arg = 0;
    double best = 1e300;
    for (std::size_t k = 0; k < t.mu.size(); ++k) {
      const double d = (t.mu[k] - xs).squaredNorm() / 3.0;
      if (d < best) best = d, arg = k;
    }
    const RunResult r = compute_metrics(t, xs);
    CHECK(r.mse == best);
    CHECK(r.hitting_time == arg);
    CHECK(r.best_value == t.f_mu[arg]);
    // Appending worse iterates changes nothing.
    t.mu.push_back(Eigen::VectorXd::Constant(3, 100.0));
    t.f_mu.push_back(0.0);
    const RunResult r2 = compute_metrics(t, xs);
    CHECK(r2.mse == r.mse);
    CHECK(r2.hitting_time == r.hitting_time);
  }
}

TEST_CASE("summary formatting") {
  CHECK(format_summary({0.04, 0.001}) == "0.04(0.00)");
  CHECK(format_summary({24.3312, 0.0211}) == "24.33(0.02)");
  const Summary s = summarize({1.0, 2.0, 3.0, 4.0});
  CHECK(s.mean == 2.5);
  CHECK(s.stddev == doctest::Approx(std::sqrt(1.25)));
  CHECK(summarize({0.3, 0.3}).stddev == 0.0);
}

TEST_CASE("identical seeds give zero spread") {
  ExperimentSpec s = small_spec();
  s.seeds = {5, 5};
  const ProtocolResult r = run_protocol(s);
  CHECK(r.mse.stddev == 0.0);
  CHECK(r.runs[0].mse == r.runs[1].mse);
}

TEST_CASE("aggregation is permutation invariant and independent of jobs") {
  ExperimentSpec s = small_spec();
  const ProtocolResult a = run_protocol(s, 1);
  std::reverse(s.seeds.begin(), s.seeds.end());
  const ProtocolResult b = run_protocol(s, 4);
  CHECK(a.mse.mean == b.mse.mean);
  CHECK(a.mse.stddev == b.mse.stddev);
  CHECK(a.hitting_time.mean == b.hitting_time.mean);
  CHECK(a.runs.front().mse == b.runs.back().mse);
  CHECK(a.runs.front().evaluations == (10 + 1) * 30 + 1);
}

TEST_CASE("aborted runs are reported") {
  ExperimentSpec s = small_spec();
  s.method.eta0 = 1e12;
  s.method.method = Method::kZoSgd;
  s.seeds = {0, 1};
  const ProtocolResult r = run_protocol(s);
  CHECK(r.aborted == 2);
  CHECK(r.runs[0].aborted);
  CHECK_FALSE(r.runs[0].reason.empty());
}

TEST_CASE("runs csv round trip") {
  ExperimentSpec s = small_spec();
  ProtocolResult a = run_protocol(s);
  s.method.method = Method::kPromot;
  ProtocolResult b = run_protocol(s);
  const auto parsed = parse_runs_csv(runs_csv({a, b}));
  REQUIRE(parsed.size() == 2);
  const std::vector<const ProtocolResult*> orig{&a, &b};
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(parsed[i].label == orig[i]->label);
    CHECK(std::abs(parsed[i].mse.mean - orig[i]->mse.mean) < 1e-12);
    CHECK(std::abs(parsed[i].mse.stddev - orig[i]->mse.stddev) < 1e-12);
    CHECK(std::abs(parsed[i].best_value.mean - orig[i]->best_value.mean) < 1e-12);
    CHECK(std::abs(parsed[i].hitting_time.mean - orig[i]->hitting_time.mean) < 1e-12);
  }
}

TEST_CASE("summary json has the metric fields") {
  const ProtocolResult r = run_protocol(small_spec());
  const std::string j = summary_json({r}, {{"objective", "ackley"}});
  for (const char* key : {"\"schema_version\"", "\"mse\"", "\"hitting_time\"", "\"best_value\"", "\"table_row\""}) {
    CHECK(j.find(key) != std::string::npos);
  }
}

TEST_CASE("sweep") {
  ExperimentSpec s = small_spec();
  SweepGrid one;
  one.eta0 = {0.5};
  const SweepResult r1 = sweep(s, one);
  REQUIRE(r1.configs.size() == 1);
  CHECK(*r1.configs[0].eta0 == 0.5);

  SweepGrid dup;
  dup.sigma = {0.5, 0.1, 0.5};
  const SweepResult r = sweep(s, dup);
  REQUIRE(r.results.size() == 3);
  for (std::size_t i = 1; i < 3; ++i) CHECK(r.results[i - 1].mse.mean <= r.results[i].mse.mean);
  std::vector<const ProtocolResult*> halves;
  for (std::size_t i = 0; i < 3; ++i) {
    if (r.configs[i].sigma == 0.5) halves.push_back(&r.results[i]);
  }
  REQUIRE(halves.size() == 2);
  for (std::size_t k = 0; k < halves[0]->runs.size(); ++k) CHECK(halves[0]->runs[k].mse == halves[1]->runs[k].mse);

  SweepGrid grid;
  grid.eta0 = {0.1, 0.5};
  grid.theta = {1.0, 3.0, 5.0};
  CHECK(grid.expand(s.method).size() == 6);
}

TEST_CASE("atomic writes leave no temporary files") {
  const auto dir = std::filesystem::temp_directory_path() / "promot_atomic_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  atomic_write(dir / "a.csv", "x\n1\n");
  atomic_write(dir / "a.csv", "x\n2\n");
  std::size_t files = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir)) files += e.is_regular_file();
  CHECK(files == 1);
  std::ifstream in(dir / "a.csv");
  std::string content((std::istreambuf_iterator<char>(in)), {});
  CHECK(content == "x\n2\n");
  std::filesystem::remove_all(dir);
}

TEST_CASE("trajectory csv") {
  const Trajectory t = make_traj({1.0, 0.5}, [](double x) { return -x; });
  const std::string with = trajectory_csv(t, true);
  CHECK(with.substr(0, with.find('\n')) == "step,eta,mu_0,f_mu,grad_norm,sigma,evals");
  const std::string without = trajectory_csv(t, false);
  CHECK(without.substr(0, without.find('\n')) == "step,eta,f_mu,grad_norm,sigma,evals");
}

TEST_CASE("disjoint seed sets agree on the ProMoT preset") {
  // Self-consistency: two independent 10-seed halves of a 20-seed run on
  // ackley(50) have means within a 95% band of each other.
  ExperimentSpec s;
  s.objective = "ackley";
  s.dimension = 50;
  s.init = {5.0, 0.01};
  s.method.method = Method::kPromot;
  s.method.eta0 = 0.5;
  s.method.sigma = 0.5;
  s.method.transform = Transform::power_exp_hybrid(5.0, 600.0, 10.0);
  s.iterations = 400;
  for (std::uint64_t i = 0; i < 10; ++i) s.seeds.push_back(i);
  const ProtocolResult a = run_protocol(s, 4);
  for (auto& seed : s.seeds) seed += 10;
  const ProtocolResult b = run_protocol(s, 4);
  const double se = std::sqrt((a.mse.stddev * a.mse.stddev + b.mse.stddev * b.mse.stddev) / 9.0);
  CHECK(std::abs(a.mse.mean - b.mse.mean) <= 1.96 * se + 1e-12);
}
