#include "promot/kernels.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/tools/roots.hpp>
#include <fmt/format.h>

#include "promot/error.hpp"

namespace promot {
namespace {

constexpr double kPi = std::numbers::pi;

// Open-interval uniform draw, never exactly 0 or 1.
double open_uniform(Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double v = 0.0;
  do {
    v = u(rng);
  } while (v <= 0.0 || v >= 1.0);
  return v;
}

// log cosh(a) without overflow.
double log_cosh(double a) {
  a = std::abs(a);
  return a + std::log1p(std::exp(-2.0 * a)) - std::numbers::ln2;
}

}  // namespace

Kernel::Kernel(KernelFamily family, double param) : family_(family), param_(param), log_norm_(0.0) {
  switch (family_) {
    case KernelFamily::kGaussian:
      log_norm_ = -0.5 * std::log(2.0 * kPi);
      break;
    case KernelFamily::kLogistic:
      log_norm_ = 0.0;
      break;
    case KernelFamily::kStudentT:
      if (!(param_ > 0.0) || !std::isfinite(param_)) {
        throw ParameterError(fmt::format("student_t requires nu > 0, got {}", param_));
      }
      log_norm_ = std::lgamma(0.5 * (param_ + 1.0)) - std::lgamma(0.5 * param_) -
                  0.5 * std::log(param_ * kPi);
      break;
    case KernelFamily::kHyperbolicSecant:
      log_norm_ = -std::numbers::ln2;
      break;
    case KernelFamily::kGeneralizedGaussian:
      if (!(param_ > 0.0) || !std::isfinite(param_)) {
        throw ParameterError(fmt::format("gen_gaussian requires beta > 0, got {}", param_));
      }
      log_norm_ = std::log(param_) - std::numbers::ln2 - std::lgamma(1.0 / param_);
      break;
  }
}

Kernel Kernel::gaussian() { return Kernel(KernelFamily::kGaussian, 0.0); }
Kernel Kernel::logistic() { return Kernel(KernelFamily::kLogistic, 0.0); }
Kernel Kernel::student_t(double nu) { return Kernel(KernelFamily::kStudentT, nu); }
Kernel Kernel::hyperbolic_secant() { return Kernel(KernelFamily::kHyperbolicSecant, 0.0); }
Kernel Kernel::generalized_gaussian(double beta) {
  return Kernel(KernelFamily::kGeneralizedGaussian, beta);
}

Kernel Kernel::from_name(std::string_view name, std::optional<double> param) {
  // Accept the "family(param)" form produced by name().
  if (auto open = name.find('('); open != std::string_view::npos && name.back() == ')') {
    const std::string_view inner = name.substr(open + 1, name.size() - open - 2);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(inner.data(), inner.data() + inner.size(), value);
    if (ec != std::errc() || ptr != inner.data() + inner.size()) {
      throw ParameterError(fmt::format("cannot parse kernel parameter in '{}'", name));
    }
    return from_name(name.substr(0, open), value);
  }
  if (name == "gaussian") return gaussian();
  if (name == "logistic") return logistic();
  if (name == "hypsec") return hyperbolic_secant();
  if (name == "cauchy") return student_t(1.0);
  if (name == "student_t") {
    if (!param) throw ParameterError("student_t requires parameter nu");
    return student_t(*param);
  }
  if (name == "gen_gaussian") {
    return generalized_gaussian(param.value_or(4.0));
  }
  throw ParameterError(fmt::format("unknown kernel '{}'", name));
}

std::string Kernel::name() const {
  switch (family_) {
    case KernelFamily::kGaussian:
      return "gaussian";
    case KernelFamily::kLogistic:
      return "logistic";
    case KernelFamily::kStudentT:
      return fmt::format("student_t({})", param_);
    case KernelFamily::kHyperbolicSecant:
      return "hypsec";
    case KernelFamily::kGeneralizedGaussian:
      return fmt::format("gen_gaussian({})", param_);
  }
  return "unknown";
}

double Kernel::log_density(double z) const {
  switch (family_) {
    case KernelFamily::kGaussian:
      return log_norm_ - 0.5 * z * z;
    case KernelFamily::kLogistic: {
      const double a = std::abs(z);
      return -a - 2.0 * std::log1p(std::exp(-a));
    }
    case KernelFamily::kStudentT:
      return log_norm_ - 0.5 * (param_ + 1.0) * std::log1p(z * z / param_);
    case KernelFamily::kHyperbolicSecant:
      return log_norm_ - log_cosh(0.5 * kPi * z);
    case KernelFamily::kGeneralizedGaussian:
      return log_norm_ - std::pow(std::abs(z), param_);
  }
  return -std::numeric_limits<double>::infinity();
}

double Kernel::density(double z) const { return std::exp(log_density(z)); }

double Kernel::score(double z) const {
  switch (family_) {
    case KernelFamily::kGaussian:
      return -z;
    case KernelFamily::kLogistic:
      return -std::tanh(0.5 * z);
    case KernelFamily::kStudentT:
      return -(param_ + 1.0) * z / (param_ + z * z);
    case KernelFamily::kHyperbolicSecant:
      return -0.5 * kPi * std::tanh(0.5 * kPi * z);
    case KernelFamily::kGeneralizedGaussian: {
      if (z == 0.0) return 0.0;
      return -param_ * std::copysign(std::pow(std::abs(z), param_ - 1.0), z);
    }
  }
  return 0.0;
}

double Kernel::score_d1(double z) const {
  switch (family_) {
    case KernelFamily::kGaussian:
      return -1.0;
    case KernelFamily::kLogistic: {
      const double t = std::tanh(0.5 * z);
      return -0.5 * (1.0 - t * t);
    }
    case KernelFamily::kStudentT: {
      const double q = param_ + z * z;
      return -(param_ + 1.0) * (param_ - z * z) / (q * q);
    }
    case KernelFamily::kHyperbolicSecant: {
      const double t = std::tanh(0.5 * kPi * z);
      return -0.25 * kPi * kPi * (1.0 - t * t);
    }
    case KernelFamily::kGeneralizedGaussian: {
      const double b = param_;
      if (z == 0.0) {
        if (b == 2.0) return -2.0;
        return b > 2.0 ? 0.0 : -std::numeric_limits<double>::infinity();
      }
      return -b * (b - 1.0) * std::pow(std::abs(z), b - 2.0);
    }
  }
  return 0.0;
}

double Kernel::density_d1(double z) const { return density(z) * score(z); }

double Kernel::density_d2(double z) const {
  const double s = score(z);
  return density(z) * (s * s + score_d1(z));
}

double Kernel::cdf(double z) const {
  switch (family_) {
    case KernelFamily::kGaussian:
      return 0.5 * std::erfc(-z / std::numbers::sqrt2);
    case KernelFamily::kLogistic:
      return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
    case KernelFamily::kStudentT:
      return boost::math::cdf(boost::math::students_t_distribution<double>(param_), z);
    case KernelFamily::kHyperbolicSecant:
      return (2.0 / kPi) * std::atan(std::exp(0.5 * kPi * z));
    case KernelFamily::kGeneralizedGaussian: {
      const double tail = 0.5 * boost::math::gamma_q(1.0 / param_, std::pow(std::abs(z), param_));
      return z >= 0.0 ? 1.0 - tail : tail;
    }
  }
  return 0.5;
}

double Kernel::sample(Rng& rng) const {
  switch (family_) {
    case KernelFamily::kGaussian: {
      std::normal_distribution<double> normal(0.0, 1.0);
      return normal(rng);
    }
    case KernelFamily::kLogistic: {
      const double u = open_uniform(rng);
      return std::log(u / (1.0 - u));
    }
    case KernelFamily::kStudentT: {
      std::normal_distribution<double> normal(0.0, 1.0);
      std::chi_squared_distribution<double> chi2(param_);
      const double z = normal(rng);
      const double c = chi2(rng);
      return z / std::sqrt(c / param_);
    }
    case KernelFamily::kHyperbolicSecant: {
      const double u = open_uniform(rng);
      return (2.0 / kPi) * std::log(std::tan(0.5 * kPi * u));
    }
    case KernelFamily::kGeneralizedGaussian: {
      std::gamma_distribution<double> gamma(1.0 / param_, 1.0);
      const double magnitude = std::pow(gamma(rng), 1.0 / param_);
      return open_uniform(rng) < 0.5 ? -magnitude : magnitude;
    }
  }
  return 0.0;
}

std::vector<double> Kernel::sample(Rng& rng, std::size_t n) const {
  if (n == 0) throw ParameterError("sample count must be at least 1");
  std::vector<double> out(n);
  for (double& v : out) v = sample(rng);
  return out;
}

double Kernel::analytic_fisher_information() const {
  switch (family_) {
    case KernelFamily::kGaussian:
      return 1.0;
    case KernelFamily::kLogistic:
      return 1.0 / 3.0;
    case KernelFamily::kStudentT:
      return (param_ + 1.0) / (param_ + 3.0);
    case KernelFamily::kHyperbolicSecant:
      return kPi * kPi / 8.0;
    case KernelFamily::kGeneralizedGaussian: {
      const double b = param_;
      if (b <= 0.5) return std::numeric_limits<double>::infinity();
      return b * b * std::exp(std::lgamma((2.0 * b - 1.0) / b) - std::lgamma(1.0 / b));
    }
  }
  return 0.0;
}

double Kernel::truncation_radius(double mass) const {
  if (!(mass > 0.0 && mass < 1.0)) throw ParameterError("tail mass must lie in (0, 1)");
  auto tail = [&](double r) { return 2.0 * cdf(-r); };
  double hi = 1.0;
  while (tail(hi) > mass) {
    hi *= 2.0;
    if (hi > 1e300) return hi;
  }
  double lo = 0.0;
  for (int i = 0; i < 200 && hi - lo > 1e-12 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (tail(mid) > mass ? lo : hi) = mid;
  }
  return hi;
}

namespace {

// Positive sign changes of p'' on (0, scan_max], refined by TOMS 748.
std::vector<double> second_derivative_roots(const Kernel& k, double scan_max, double step) {
  std::vector<double> roots;
  auto f = [&](double z) { return k.density_d2(z); };
  double a = step;
  double fa = f(a);
  for (double b = a + step; b <= scan_max; b += step) {
    const double fb = f(b);
    if (fa == 0.0) {
      roots.push_back(a);
    } else if ((fa < 0.0) != (fb < 0.0) && fb != 0.0) {
      std::uintmax_t iters = 200;
      auto tol = boost::math::tools::eps_tolerance<double>(52);
      const auto [lo, hi] = boost::math::tools::toms748_solve(f, a, b, fa, fb, tol, iters);
      roots.push_back(0.5 * (lo + hi));
    }
    a = b;
    fa = fb;
  }
  return roots;
}

}  // namespace

KernelConstants compute_constants(const Kernel& kernel, double tolerance) {
  if (kernel.family() == KernelFamily::kGeneralizedGaussian && kernel.param() < 2.0) {
    throw ParameterError(fmt::format(
        "{} is not twice continuously differentiable at 0 (requires beta >= 2)", kernel.name()));
  }
  using Quad = boost::math::quadrature::gauss_kronrod<double, 61>;
  constexpr unsigned kMaxDepth = 20;
  constexpr double kInf = std::numeric_limits<double>::infinity();

  std::vector<double> breaks{0.0};
  for (double r : second_derivative_roots(kernel, 50.0, 1e-2)) breaks.push_back(r);
  breaks.push_back(kInf);

  auto fisher_integrand = [&](double z) {
    const double s = kernel.score(z);
    return s * s * kernel.density(z);
  };
  auto curvature_integrand = [&](double z) { return kernel.density_d2(z); };

  KernelConstants out;
  double error = 0.0;
  // Both integrands are even, so integrate over [0, inf) and double.
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const double a = breaks[i];
    const double b = breaks[i + 1];
    double e1 = 0.0;
    double e2 = 0.0;
    out.fisher_information += 2.0 * Quad::integrate(fisher_integrand, a, b, kMaxDepth, tolerance, &e1);
    // p'' keeps one sign between consecutive breaks, so |int p''| = int |p''|.
    out.curvature +=
        2.0 * std::abs(Quad::integrate(curvature_integrand, a, b, kMaxDepth, tolerance, &e2));
    error += 2.0 * (e1 + e2);
  }
  out.abs_error = error;
  const double scale = 1.0 + out.fisher_information + out.curvature;
  if (!(error <= 1e3 * tolerance * scale) || !std::isfinite(out.curvature) ||
      !std::isfinite(out.fisher_information)) {
    throw AccuracyError(fmt::format("quadrature for {} did not converge (achieved {:.3e})",
                                    kernel.name(), error),
                        error);
  }
  return out;
}

std::optional<KernelConstants> reference_constants(const Kernel& kernel) {
  switch (kernel.family()) {
    case KernelFamily::kGaussian:
      return KernelConstants{1.0, 0.96749, 0.0};
    case KernelFamily::kLogistic:
      return KernelConstants{1.0 / 3.0, 0.38496, 0.0};
    case KernelFamily::kHyperbolicSecant:
      return KernelConstants{kPi * kPi / 8.0, kPi / 2.0, 0.0};
    case KernelFamily::kStudentT: {
      const double nu = kernel.param();
      const double fisher = (nu + 1.0) / (nu + 3.0);
      if (nu == 1.0) return KernelConstants{fisher, 0.82691, 0.0};
      if (nu == 3.0) return KernelConstants{fisher, 0.87870, 0.0};
      if (nu == 10.0) return KernelConstants{fisher, 0.92883, 0.0};
      return std::nullopt;
    }
    case KernelFamily::kGeneralizedGaussian:
      if (kernel.param() == 4.0) return KernelConstants{4.05587, 3.36400, 0.0};
      return std::nullopt;
  }
  return std::nullopt;
}

std::vector<Kernel> shipped_kernels() {
  return {Kernel::gaussian(),        Kernel::logistic(),   Kernel::student_t(1.0),
          Kernel::student_t(3.0),    Kernel::student_t(10.0), Kernel::hyperbolic_secant(),
          Kernel::generalized_gaussian(4.0)};
}

ShiftedProductKernel::ShiftedProductKernel(Kernel base, Eigen::VectorXd center,
                                           Eigen::VectorXd scales)
    : base_(base), center_(std::move(center)), scales_(std::move(scales)) {
  if (center_.size() != scales_.size()) {
    throw ParameterError("center and scales must have the same dimension");
  }
  if ((scales_.array() <= 0.0).any() || !scales_.allFinite()) {
    throw ParameterError("smoothing scales must be positive and finite");
  }
}

double ShiftedProductKernel::log_density(const Eigen::VectorXd& x) const {
  double total = 0.0;
  for (Eigen::Index i = 0; i < center_.size(); ++i) {
    const double z = (x[i] - center_[i]) / scales_[i];
    total += base_.log_density(z) - std::log(scales_[i]);
  }
  return total;
}

Eigen::VectorXd ShiftedProductKernel::score(const Eigen::VectorXd& x) const {
  Eigen::VectorXd s(center_.size());
  for (Eigen::Index i = 0; i < center_.size(); ++i) {
    const double z = (x[i] - center_[i]) / scales_[i];
    s[i] = -base_.score(z) / scales_[i];
  }
  return s;
}

Eigen::VectorXd ShiftedProductKernel::sample(Rng& rng) const {
  Eigen::VectorXd x(center_.size());
  for (Eigen::Index i = 0; i < center_.size(); ++i) {
    x[i] = center_[i] + scales_[i] * base_.sample(rng);
  }
  return x;
}

}  // namespace promot
