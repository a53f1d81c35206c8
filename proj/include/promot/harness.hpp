#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "promot/baselines.hpp"
#include "promot/objectives.hpp"
#include "promot/optimizer.hpp"

namespace promot {

inline constexpr int kSchemaVersion = 1;

/// One optimizer configuration: a smoothing-driver method (ProMoT,
/// ProMoT-loo, EPGS) or a two-point baseline.
struct MethodConfig {
  Method method = Method::kPromot;
  std::optional<double> eta0;
  double sigma = 0.1;
  std::size_t batch = 50;
  // Smoothing-driver methods.
  Kernel kernel = Kernel::logistic();
  Transform transform = Transform::identity();
  std::optional<double> ridge;
  ScheduleKind schedule = ScheduleKind::kConstant;
  double schedule_gamma = 0.1;
  std::vector<double> schedule_table;
  // Two-point baselines.
  double gamma_dec = 1.0;
  double alpha = 0.1;
  double beta1 = 0.9;
  double beta2 = 0.5;

  SmoothingSpec smoothing_spec(const Box& domain) const;
  ScheduleSpec schedule_spec() const;
  BaselineSpec baseline_spec() const;
  /// Checks the fields the chosen method uses.
  void validate() const;
  /// "eta0=0.5 sigma=0.5 theta=5" style summary of the tunable values.
  std::string describe() const;
};

/// mu0 ~ N(mean * 1, stddev^2 I) drawn from derive_seed(seed, kStreamInit).
struct InitSpec {
  double mean = 0.0;
  double stddev = 0.0;
};

Eigen::VectorXd initial_point(const InitSpec& init, Eigen::Index d, std::uint64_t seed);

/// Runs any method from mu0. ProMoT-family methods use the objective's
/// domain box for the smoothing indicator.
Trajectory run_method(const MethodConfig& config, const Objective& f, const Eigen::VectorXd& mu0,
                      std::size_t iterations, std::uint64_t seed);

struct RunResult {
  std::uint64_t seed = 0;
  double mse = 0.0;  // min_t |mu_t - x*|^2 / d
  std::size_t hitting_time = 0;
  double best_value = 0.0;
  std::uint64_t evaluations = 0;
  double wall_seconds = 0.0;
  bool aborted = false;
  std::string reason;
};

/// mse = min_t |mu_t - x*|^2 / d, hitting_time = first t attaining it,
/// best_value = f(mu_t) there. Without x*, mse is NaN and hitting time and
/// best value refer to the largest observed f.
RunResult compute_metrics(const Trajectory& traj, const std::optional<Eigen::VectorXd>& x_star);

struct Summary {
  double mean = 0.0;
  double stddev = 0.0;  // population standard deviation
};

Summary summarize(const std::vector<double>& values);
/// "0.04(0.00)".
std::string format_summary(const Summary& s, int decimals = 2);

struct ProtocolResult {
  std::string label;
  std::vector<RunResult> runs;  // in seed-list order
  Summary mse;
  Summary hitting_time;
  Summary best_value;
  std::size_t aborted = 0;
  std::vector<Trajectory> trajectories;  // filled when requested; empty for aborted runs
};

struct ExperimentSpec {
  std::string objective = "ackley";
  Eigen::Index dimension = 50;
  InitSpec init;
  MethodConfig method;
  std::size_t iterations = 400;
  std::vector<std::uint64_t> seeds;
};

/// Builds the benchmark named in the spec.
Objective make_objective(const ExperimentSpec& spec);

/// Aggregates per-seed results (aborted runs excluded from the statistics
/// but counted).
void aggregate(ProtocolResult& result);

/// One run per seed over at most `jobs` worker threads. Results are stored
/// by seed index, so output does not depend on scheduling.
ProtocolResult run_protocol(const ExperimentSpec& spec, std::size_t jobs = 1,
                            bool keep_trajectories = false);

/// Candidate lists per hyperparameter; an empty list keeps the base value.
struct SweepGrid {
  std::vector<double> eta0;
  std::vector<double> sigma;
  std::vector<double> theta;
  std::vector<double> gamma_dec;
  std::vector<double> alpha;
  std::vector<double> beta1;
  std::vector<double> beta2;

  /// Cartesian product applied to `base`, in lexicographic order.
  std::vector<MethodConfig> expand(const MethodConfig& base) const;
};

struct SweepResult {
  std::vector<MethodConfig> configs;      // ranked order
  std::vector<ProtocolResult> results;    // ranked order
  std::size_t selected = 0;               // always 0 after ranking
};

/// Evaluates every grid point on every seed and ranks by mean MSE
/// ascending. Points with aborted runs rank last.
SweepResult sweep(const ExperimentSpec& base, const SweepGrid& grid, std::size_t jobs = 1);

// Persistence. Every write goes to a temporary file that is then renamed.
void atomic_write(const std::filesystem::path& path, const std::string& content);

std::string trajectory_csv(const Trajectory& traj, bool include_mu);
std::string runs_csv(const std::vector<ProtocolResult>& results);
/// Parses runs_csv output back into per-label results (aggregated).
std::vector<ProtocolResult> parse_runs_csv(const std::string& text);
std::string summary_json(const std::vector<ProtocolResult>& results,
                         const std::map<std::string, std::string>& meta = {});

/// Smoothed 1-D curves for every (theta, sigma) pair on a uniform grid.
/// Columns: mu, f, then G_theta<t>_sigma<s> per pair (values scaled by
/// g(theta, f*)). Failed columns hold NaN and are listed in `failed`.
struct LandscapeTable {
  std::vector<double> mu;
  std::vector<double> f;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> values;
  std::vector<std::string> failed;

  std::string csv() const;
};

LandscapeTable landscape_table(const Kernel& kernel, const Transform& transform,
                               const std::vector<double>& thetas,
                               const std::vector<double>& sigmas, double lo, double hi,
                               std::size_t points);

/// Black-box attacks on the synthetic classifier, one per input.
struct AttackSpec {
  std::size_t classes = 4;
  Eigen::Index dimension = 20;
  std::uint64_t classifier_seed = 7;
  std::size_t inputs = 20;
  double kappa = 0.0;
  double penalty = 0.1;
  double radius = 10.0;
  MethodConfig method;
  std::size_t iterations = 500;
};

struct AttackOutcome {
  std::size_t input = 0;
  std::size_t target = 0;
  bool success = false;
  std::size_t first_success = 0;  // iteration index, valid when success
  double r_squared = 0.0;          // 1 - |mu|^2 / |x - mean(x)|^2
  double linf = 0.0;
  bool aborted = false;
  std::string reason;
};

struct AttackReport {
  std::vector<AttackOutcome> outcomes;
  double success_rate = 0.0;
  Summary r_squared;  // over successful attacks
  Summary linf;       // over successful attacks
};

/// Inputs are drawn from N(0, I) with derive_seed(seed, kStreamData + i).
/// An attack succeeds when some iterate mu_t flips the prediction to the
/// target; the reported perturbation is the first such iterate.
AttackReport run_attacks(const AttackSpec& spec, std::uint64_t seed, std::size_t jobs = 1);

}  // namespace promot
