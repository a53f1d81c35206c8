#include "promot/transforms.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "promot/error.hpp"

namespace promot {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
// Largest log value whose exponential is still a finite double.
const double kMaxLog = std::log(std::numeric_limits<double>::max());

// log(1 + e^x) for any x.
double softplus_fn(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

// log(log(1 + e^x)); stays accurate when log(1 + e^x) underflows.
double log_softplus(double x) {
  if (x < -30.0) {
    const double u = std::exp(x);
    return x - 0.5 * u;
  }
  return std::log(softplus_fn(x));
}

// log sinh(x) for x > 0.
double log_sinh(double x) { return x + std::log1p(-std::exp(-2.0 * x)) - std::log(2.0); }

}  // namespace

Transform::Transform(TransformFamily family, double theta, Params params)
    : family_(family), theta_(theta), params_(params) {
  if (!(theta_ > 0.0) || !std::isfinite(theta_)) {
    throw ParameterError(fmt::format("theta must be positive and finite, got {}", theta_));
  }
  switch (family_) {
    case TransformFamily::kPower:
    case TransformFamily::kSinhShift:
      if (!(params_.c >= 0.0)) throw ParameterError("offset c must be nonnegative");
      break;
    case TransformFamily::kPowerExpHybrid:
      if (!(params_.c >= 0.0)) throw ParameterError("offset c must be nonnegative");
      if (!(params_.beta >= 0.0)) throw ParameterError("hybrid exponent beta must be nonnegative");
      break;
    case TransformFamily::kFracExponential:
    case TransformFamily::kSigmoidPower:
      if (!(params_.alpha > 0.0)) throw ParameterError("alpha must be positive");
      break;
    case TransformFamily::kExponential:
    case TransformFamily::kSoftplus:
      break;
  }
}

Transform Transform::power(double theta, double c) {
  return Transform(TransformFamily::kPower, theta, {.c = c});
}
Transform Transform::exponential(double theta) {
  return Transform(TransformFamily::kExponential, theta);
}
Transform Transform::frac_exponential(double theta, double alpha) {
  return Transform(TransformFamily::kFracExponential, theta, {.alpha = alpha});
}
Transform Transform::power_exp_hybrid(double theta, double c, double beta) {
  return Transform(TransformFamily::kPowerExpHybrid, theta, {.c = c, .beta = beta});
}
Transform Transform::softplus(double theta) { return Transform(TransformFamily::kSoftplus, theta); }
Transform Transform::sinh_shift(double theta, double c) {
  return Transform(TransformFamily::kSinhShift, theta, {.c = c});
}
Transform Transform::sigmoid_power(double theta, double alpha) {
  return Transform(TransformFamily::kSigmoidPower, theta, {.alpha = alpha});
}
Transform Transform::identity() { return power(1.0, 0.0); }

TransformFamily Transform::family_from_name(std::string_view name) {
  if (name == "power") return TransformFamily::kPower;
  if (name == "exponential") return TransformFamily::kExponential;
  if (name == "frac_exponential") return TransformFamily::kFracExponential;
  if (name == "power_exp_hybrid") return TransformFamily::kPowerExpHybrid;
  if (name == "softplus") return TransformFamily::kSoftplus;
  if (name == "sinh_shift") return TransformFamily::kSinhShift;
  if (name == "sigmoid_power") return TransformFamily::kSigmoidPower;
  throw ParameterError(fmt::format("unknown transform family '{}'", name));
}

std::string_view Transform::family_name(TransformFamily family) {
  switch (family) {
    case TransformFamily::kPower:
      return "power";
    case TransformFamily::kExponential:
      return "exponential";
    case TransformFamily::kFracExponential:
      return "frac_exponential";
    case TransformFamily::kPowerExpHybrid:
      return "power_exp_hybrid";
    case TransformFamily::kSoftplus:
      return "softplus";
    case TransformFamily::kSinhShift:
      return "sinh_shift";
    case TransformFamily::kSigmoidPower:
      return "sigmoid_power";
  }
  return "unknown";
}

std::string Transform::name() const {
  const std::string_view fam = family_name(family_);
  switch (family_) {
    case TransformFamily::kPower:
    case TransformFamily::kSinhShift:
      return fmt::format("{}(theta={}, c={})", fam, theta_, params_.c);
    case TransformFamily::kPowerExpHybrid:
      return fmt::format("{}(theta={}, c={}, beta={})", fam, theta_, params_.c, params_.beta);
    case TransformFamily::kFracExponential:
    case TransformFamily::kSigmoidPower:
      return fmt::format("{}(theta={}, alpha={})", fam, theta_, params_.alpha);
    default:
      return fmt::format("{}(theta={})", fam, theta_);
  }
}

Transform Transform::with_theta(double theta) const { return Transform(family_, theta, params_); }

bool Transform::in_domain(double y) const {
  if (std::isnan(y)) return false;
  switch (family_) {
    case TransformFamily::kPower:
    case TransformFamily::kPowerExpHybrid:
      return y > -params_.c;
    case TransformFamily::kSinhShift:
      return y >= -params_.c;
    default:
      return true;
  }
}

double Transform::log_eval(double y) const {
  if (!in_domain(y)) {
    throw DomainError(fmt::format("{} is undefined at y = {}", name(), y));
  }
  switch (family_) {
    case TransformFamily::kPower:
      return theta_ * std::log(y + params_.c);
    case TransformFamily::kExponential:
      return theta_ * y;
    case TransformFamily::kFracExponential:
      return theta_ * std::pow(std::max(y, 0.0), params_.alpha);
    case TransformFamily::kPowerExpHybrid: {
      const double shifted = y + params_.c;
      const double power_part = params_.beta == 0.0 ? 0.0 : params_.beta * std::log(shifted);
      return power_part + theta_ * y;
    }
    case TransformFamily::kSoftplus:
      return log_softplus(theta_ * y);
    case TransformFamily::kSinhShift: {
      const double x = theta_ * (y + params_.c);
      return x > 0.0 ? log_sinh(x) : kNegInf;
    }
    case TransformFamily::kSigmoidPower:
      // log sigmoid(t) = -log(1 + e^{-t})
      return -theta_ * softplus_fn(-params_.alpha * y);
  }
  return kNegInf;
}

double Transform::eval(double y) const {
  if (!in_domain(y)) {
    throw DomainError(fmt::format("{} is undefined at y = {}", name(), y));
  }
  auto overflow = [&](double argument) {
    return OverflowError(fmt::format("{} overflows at theta = {}, y = {} (exponent argument {})",
                                     name(), theta_, y, argument),
                         theta_, y);
  };
  switch (family_) {
    case TransformFamily::kExponential:
    case TransformFamily::kPowerExpHybrid:
      if (std::abs(theta_ * y) > kOverflowGuard) throw overflow(theta_ * y);
      break;
    case TransformFamily::kFracExponential: {
      const double arg = theta_ * std::pow(std::max(y, 0.0), params_.alpha);
      if (arg > kOverflowGuard) throw overflow(arg);
      break;
    }
    case TransformFamily::kSinhShift: {
      const double arg = theta_ * (y + params_.c);
      if (arg > kOverflowGuard) throw overflow(arg);
      return std::sinh(arg);
    }
    case TransformFamily::kSoftplus:
      return softplus_fn(theta_ * y);
    case TransformFamily::kSigmoidPower:
      return std::pow(1.0 / (1.0 + std::exp(-params_.alpha * y)), theta_);
    case TransformFamily::kPower:
      break;
  }
  const double log_value = log_eval(y);
  if (log_value > kMaxLog) throw overflow(log_value);
  if (family_ == TransformFamily::kPower) return std::pow(y + params_.c, theta_);
  if (family_ == TransformFamily::kPowerExpHybrid) {
    return std::pow(y + params_.c, params_.beta) * std::exp(theta_ * y);
  }
  return std::exp(log_value);
}

RatioCheckReport ratio_monotonicity_check(const Transform& transform, double a, double b,
                                          std::span<const double> theta_grid) {
  RatioCheckReport report;
  if (!(a > b)) throw ParameterError("ratio check requires a > b");
  for (std::size_t i = 1; i < theta_grid.size(); ++i) {
    if (!(theta_grid[i] > theta_grid[i - 1])) {
      throw ParameterError("theta grid must be strictly increasing");
    }
  }
  const auto family = transform.family();
  if ((family == TransformFamily::kSoftplus || family == TransformFamily::kSigmoidPower) &&
      !(b > 0.0)) {
    report.claimed = false;
    report.note = "ratio monotonicity is only claimed for a > b > 0";
    return report;
  }
  if (family == TransformFamily::kSinhShift && !(b > -transform.params().c)) {
    report.claimed = false;
    report.note = "ratio is unbounded at b = -c";
    return report;
  }

  double previous = 0.0;
  for (std::size_t i = 0; i < theta_grid.size(); ++i) {
    const Transform g = transform.with_theta(theta_grid[i]);
    const double log_ratio = g.log_eval(a) - g.log_eval(b);
    if (i > 0) {
      const double slack = 1e-12 * std::max(1.0, std::abs(previous));
      const double drop = previous - log_ratio;
      if (drop > slack) {
        if (report.passed) report.first_failure = i - 1;
        report.passed = false;
        report.worst_violation = std::max(report.worst_violation, drop);
      }
    }
    previous = log_ratio;
  }
  return report;
}

}  // namespace promot
