#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace promot {

/// Axis-aligned box [lo_i, hi_i]^d. Bounds may be infinite.
struct Box {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;

  static Box cube(Eigen::Index d, double lo, double hi);
  static Box unbounded(Eigen::Index d);

  Eigen::Index dimension() const { return lo.size(); }
  bool contains(const Eigen::VectorXd& x) const;
  /// Longest side, max_i (hi_i - lo_i).
  double diameter() const;
};

/// A black-box objective to be maximized over its domain box.
class Objective {
 public:
  using Function = std::function<double(const Eigen::VectorXd&)>;

  Objective(std::string name, Function fn, Box domain,
            std::optional<Eigen::VectorXd> maximizer = std::nullopt,
            std::optional<double> optimum = std::nullopt);

  const std::string& name() const { return name_; }
  Eigen::Index dimension() const { return domain_.dimension(); }
  const Box& domain() const { return domain_; }
  const std::optional<Eigen::VectorXd>& maximizer() const { return maximizer_; }
  const std::optional<double>& optimum() const { return optimum_; }

  /// Evaluates f(x). Throws ParameterError on a dimension mismatch.
  double operator()(const Eigen::VectorXd& x) const;

  /// Same objective with a different domain box.
  Objective with_domain(Box domain) const;

 private:
  std::string name_;
  Function fn_;
  Box domain_;
  std::optional<Eigen::VectorXd> maximizer_;
  std::optional<double> optimum_;
};

// Benchmarks, written for maximization. Default boxes are the usual
// literature ones: Ackley [-32.768, 32.768], Rosenbrock [-5, 10],
// Griewank [-600, 600].
Objective ackley(Eigen::Index d);
Objective rosenbrock(Eigen::Index d);  // d >= 2
Objective griewank(Eigen::Index d);

/// Builds a benchmark by name: ackley | rosenbrock | griewank.
Objective benchmark(const std::string& name, Eigen::Index d);

/// A fixed 1-D multimodal function on [-30, 30]: a narrow global peak of
/// height 1 at x* = 1 (half-width 0.5), a wide hump of height 0.8 at -9
/// (half-width 4) and a hump of height 0.6 at 10 (half-width 3). Every component is a compactly supported biweight bump, so the
/// maximizer is exact and f = 0 between bumps.
Objective landscape_objective();
/// Points where the landscape objective is not smooth (bump support ends).
std::vector<double> landscape_breakpoints();

/// Linear classifier with logits C(x) = W x + bias.
class SoftmaxClassifier {
 public:
  SoftmaxClassifier(Eigen::MatrixXd weights, Eigen::VectorXd bias);

  /// Weights W_ij ~ N(0, scale^2 / d), bias ~ N(0, 0.1^2) from `seed`.
  static SoftmaxClassifier synthetic(std::size_t classes, Eigen::Index d, std::uint64_t seed,
                                     double scale = 2.0);

  std::size_t classes() const { return static_cast<std::size_t>(weights_.rows()); }
  Eigen::Index dimension() const { return weights_.cols(); }
  Eigen::VectorXd logits(const Eigen::VectorXd& x) const;
  Eigen::VectorXd probabilities(const Eigen::VectorXd& x) const;
  std::size_t predict(const Eigen::VectorXd& x) const;

 private:
  Eigen::MatrixXd weights_;
  Eigen::VectorXd bias_;
};

/// Targeted attack on the most unlikely class of `input`.
struct AttackProblem {
  SoftmaxClassifier classifier;
  Eigen::VectorXd input;
  std::size_t target = 0;
  double kappa = 0.0;
  double penalty = 0.0;

  AttackProblem(SoftmaxClassifier classifier, Eigen::VectorXd input, double kappa, double penalty);

  /// L(mu) = -max{max_{y != tgt} C(x+mu)_y - C(x+mu)_tgt, kappa} - penalty ||mu||_2.
  double loss(const Eigen::VectorXd& mu) const;
  /// argmax_y C(x + mu)_y == target.
  bool success(const Eigen::VectorXd& mu) const;
  /// Objective over perturbations mu in [-radius, radius]^d.
  Objective objective(double radius) const;
};

/// Attaches an external program speaking the line protocol: one
/// whitespace-separated x vector per line in, one real per line out.
/// The process is started once and shared by copies of the objective;
/// calls are serialized. Throws Error on timeout or protocol violation.
Objective subprocess_objective(const std::string& command, Box domain,
                               std::chrono::milliseconds timeout = std::chrono::seconds(10),
                               std::string name = "external");

}  // namespace promot
