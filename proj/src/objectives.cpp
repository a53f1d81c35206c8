#include "promot/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>

#include "promot/error.hpp"
#include "promot/rng.hpp"

namespace promot {

Box Box::cube(Eigen::Index d, double lo, double hi) {
  if (d < 1) throw ParameterError("box dimension must be at least 1");
  if (!(lo < hi)) throw ParameterError("box requires lo < hi");
  return Box{Eigen::VectorXd::Constant(d, lo), Eigen::VectorXd::Constant(d, hi)};
}

Box Box::unbounded(Eigen::Index d) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  return Box{Eigen::VectorXd::Constant(d, -kInf), Eigen::VectorXd::Constant(d, kInf)};
}

bool Box::contains(const Eigen::VectorXd& x) const {
  return ((x.array() >= lo.array()) && (x.array() <= hi.array())).all();
}

double Box::diameter() const { return (hi - lo).maxCoeff(); }

Objective::Objective(std::string name, Function fn, Box domain,
                     std::optional<Eigen::VectorXd> maximizer, std::optional<double> optimum)
    : name_(std::move(name)),
      fn_(std::move(fn)),
      domain_(std::move(domain)),
      maximizer_(std::move(maximizer)),
      optimum_(optimum) {
  if (domain_.lo.size() != domain_.hi.size() || domain_.lo.size() < 1) {
    throw ParameterError("objective domain is malformed");
  }
  if (maximizer_ && maximizer_->size() != domain_.dimension()) {
    throw ParameterError("maximizer dimension does not match the domain");
  }
}

double Objective::operator()(const Eigen::VectorXd& x) const {
  if (x.size() != dimension()) {
    throw ParameterError(
        fmt::format("{} expects dimension {}, got {}", name_, dimension(), x.size()));
  }
  return fn_(x);
}

Objective Objective::with_domain(Box domain) const {
  Objective copy = *this;
  if (domain.dimension() != dimension()) throw ParameterError("domain dimension mismatch");
  copy.domain_ = std::move(domain);
  return copy;
}

Objective ackley(Eigen::Index d) {
  if (d < 1) throw ParameterError("ackley requires d >= 1");
  auto fn = [](const Eigen::VectorXd& x) {
    const double n = static_cast<double>(x.size());
    const double rms = std::sqrt(x.squaredNorm() / n);
    double cos_sum = 0.0;
    for (double v : x) cos_sum += std::cos(2.0 * std::numbers::pi * v);
    return 20.0 * std::exp(-0.2 * rms) + std::exp(cos_sum / n) - 20.0 - std::numbers::e;
  };
  return Objective("ackley", fn, Box::cube(d, -32.768, 32.768), Eigen::VectorXd::Zero(d), 0.0);
}

Objective rosenbrock(Eigen::Index d) {
  if (d < 2) throw ParameterError("rosenbrock requires d >= 2");
  auto fn = [](const Eigen::VectorXd& x) {
    double total = 0.0;
    for (Eigen::Index i = 0; i + 1 < x.size(); ++i) {
      const double a = x[i + 1] - x[i] * x[i];
      const double b = 1.0 - x[i];
      total += 100.0 * a * a + b * b;
    }
    return -total / static_cast<double>(x.size() - 1);
  };
  return Objective("rosenbrock", fn, Box::cube(d, -5.0, 10.0), Eigen::VectorXd::Ones(d), 0.0);
}

Objective griewank(Eigen::Index d) {
  if (d < 1) throw ParameterError("griewank requires d >= 1");
  const double factor = std::pow(1.05, 0.2);
  auto fn = [factor](const Eigen::VectorXd& x) {
    double product = 1.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      product *= factor * std::cos(x[i] / std::sqrt(static_cast<double>(i + 1)));
    }
    return -1.0 - x.squaredNorm() / 4000.0 + product;
  };
  const double optimum = std::pow(1.05, 0.2 * static_cast<double>(d)) - 1.0;
  return Objective("griewank", fn, Box::cube(d, -600.0, 600.0), Eigen::VectorXd::Zero(d),
                   optimum);
}

Objective benchmark(const std::string& name, Eigen::Index d) {
  if (name == "ackley") return ackley(d);
  if (name == "rosenbrock") return rosenbrock(d);
  if (name == "griewank") return griewank(d);
  throw ParameterError(fmt::format("unknown benchmark '{}'", name));
}

namespace {

struct Bump {
  double center;
  double half_width;
  double height;
};

constexpr Bump kLandscapeBumps[] = {
    {1.0, 0.5, 1.0},
    {-9.0, 4.0, 0.8},
    {10.0, 3.0, 0.6},
};

// C^1 biweight bump (1 - u^2)^2 on |u| < 1.
double biweight(double u) {
  if (std::abs(u) >= 1.0) return 0.0;
  const double q = 1.0 - u * u;
  return q * q;
}

}  // namespace

Objective landscape_objective() {
  auto fn = [](const Eigen::VectorXd& x) {
    double total = 0.0;
    for (const Bump& b : kLandscapeBumps) {
      total += b.height * biweight((x[0] - b.center) / b.half_width);
    }
    return total;
  };
  return Objective("landscape", fn, Box::cube(1, -30.0, 30.0), Eigen::VectorXd::Constant(1, 1.0),
                   1.0);
}

std::vector<double> landscape_breakpoints() {
  std::vector<double> points;
  for (const Bump& b : kLandscapeBumps) {
    points.push_back(b.center - b.half_width);
    points.push_back(b.center);
    points.push_back(b.center + b.half_width);
  }
  std::sort(points.begin(), points.end());
  return points;
}

SoftmaxClassifier::SoftmaxClassifier(Eigen::MatrixXd weights, Eigen::VectorXd bias)
    : weights_(std::move(weights)), bias_(std::move(bias)) {
  if (weights_.rows() < 2) throw ParameterError("classifier needs at least two classes");
  if (bias_.size() != weights_.rows()) throw ParameterError("bias size must equal class count");
}

SoftmaxClassifier SoftmaxClassifier::synthetic(std::size_t classes, Eigen::Index d,
                                               std::uint64_t seed, double scale) {
  Rng rng(derive_seed(seed, kStreamData));
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd w(static_cast<Eigen::Index>(classes), d);
  const double s = scale / std::sqrt(static_cast<double>(d));
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = s * normal(rng);
  }
  Eigen::VectorXd b(w.rows());
  for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = 0.1 * normal(rng);
  return SoftmaxClassifier(std::move(w), std::move(b));
}

Eigen::VectorXd SoftmaxClassifier::logits(const Eigen::VectorXd& x) const {
  if (x.size() != weights_.cols()) {
    throw ParameterError(fmt::format("classifier expects dimension {}, got {}", weights_.cols(),
                                     x.size()));
  }
  return weights_ * x + bias_;
}

Eigen::VectorXd SoftmaxClassifier::probabilities(const Eigen::VectorXd& x) const {
  Eigen::VectorXd z = logits(x);
  z.array() -= z.maxCoeff();
  z = z.array().exp();
  return z / z.sum();
}

std::size_t SoftmaxClassifier::predict(const Eigen::VectorXd& x) const {
  Eigen::Index best = 0;
  logits(x).maxCoeff(&best);
  return static_cast<std::size_t>(best);
}

AttackProblem::AttackProblem(SoftmaxClassifier c, Eigen::VectorXd x, double kappa_value,
                             double penalty_value)
    : classifier(std::move(c)), input(std::move(x)), kappa(kappa_value), penalty(penalty_value) {
  if (input.size() != classifier.dimension()) {
    throw ParameterError("attack input dimension does not match the classifier");
  }
  if (!(penalty >= 0.0)) throw ParameterError("attack penalty must be nonnegative");
  Eigen::Index tgt = 0;
  classifier.logits(input).minCoeff(&tgt);
  target = static_cast<std::size_t>(tgt);
}

double AttackProblem::loss(const Eigen::VectorXd& mu) const {
  if (mu.size() != input.size()) throw ParameterError("perturbation dimension mismatch");
  const Eigen::VectorXd z = classifier.logits(input + mu);
  double best_other = -std::numeric_limits<double>::infinity();
  for (Eigen::Index y = 0; y < z.size(); ++y) {
    if (static_cast<std::size_t>(y) != target) best_other = std::max(best_other, z[y]);
  }
  const double margin = best_other - z[static_cast<Eigen::Index>(target)];
  return -std::max(margin, kappa) - penalty * mu.norm();
}

bool AttackProblem::success(const Eigen::VectorXd& mu) const {
  return classifier.predict(input + mu) == target;
}

Objective AttackProblem::objective(double radius) const {
  auto self = std::make_shared<const AttackProblem>(*this);
  return Objective(
      "attack", [self](const Eigen::VectorXd& mu) { return self->loss(mu); },
      Box::cube(input.size(), -radius, radius));
}

}  // namespace promot
