#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace promot {

enum class TransformFamily {
  kPower,            // (y + c)^theta
  kExponential,      // exp(theta y)
  kFracExponential,  // exp(theta y_+^alpha)
  kPowerExpHybrid,   // (y + c)^beta exp(theta y)
  kSoftplus,         // log(1 + exp(theta y))
  kSinhShift,        // sinh(theta (y + c))_+
  kSigmoidPower,     // sigmoid(alpha y)^theta
};

/// Shape parameters shared by the transform families.
struct TransformParams {
  double c = 0.0;      // offset for power / hybrid / sinh_shift
  double beta = 0.0;   // hybrid power exponent
  double alpha = 1.0;  // frac_exponential exponent, sigmoid_power slope

  bool operator==(const TransformParams&) const = default;
};

/// Ratio-monotone amplification g(theta, y) applied to objective values.
///
/// Every family is nondecreasing in y and, for a > b in its validity
/// domain, theta -> g(theta, a) / g(theta, b) is nondecreasing.
class Transform {
 public:
  using Params = TransformParams;

  Transform(TransformFamily family, double theta, Params params = {});

  static Transform power(double theta, double c);
  static Transform exponential(double theta);
  static Transform frac_exponential(double theta, double alpha);
  static Transform power_exp_hybrid(double theta, double c, double beta);
  static Transform softplus(double theta);
  static Transform sinh_shift(double theta, double c);
  static Transform sigmoid_power(double theta, double alpha);
  /// g(theta, y) = y on y > 0: power family with c = 0 and theta = 1.
  static Transform identity();

  /// Family ids: power, exponential, frac_exponential, power_exp_hybrid,
  /// softplus, sinh_shift, sigmoid_power.
  static TransformFamily family_from_name(std::string_view name);
  static std::string_view family_name(TransformFamily family);

  TransformFamily family() const { return family_; }
  double theta() const { return theta_; }
  const Params& params() const { return params_; }
  std::string name() const;

  Transform with_theta(double theta) const;

  bool in_domain(double y) const;

  /// g(theta, y). Throws DomainError outside the family domain and
  /// OverflowError when the exponent argument exceeds the overflow guard.
  double eval(double y) const;

  /// log g(theta, y) without forming the exponential. Returns -inf where
  /// g vanishes (e.g. frac_exponential never does, sinh_shift at y = -c).
  double log_eval(double y) const;

  bool operator==(const Transform&) const = default;

 private:
  TransformFamily family_;
  double theta_;
  Params params_;
};

/// |exponent argument| above which eval refuses to exponentiate.
inline constexpr double kOverflowGuard = 700.0;

struct RatioCheckReport {
  bool claimed = true;  // false outside the family's proven domain
  bool passed = true;
  double worst_violation = 0.0;
  std::size_t first_failure = 0;  // grid index i with ratio(i+1) < ratio(i)
  std::string note;
};

/// Verifies theta -> g(theta, a)/g(theta, b) is nondecreasing along
/// `theta_grid` (strictly increasing). Ratios are compared in log space with
/// a 1e-12 relative slack. softplus and sigmoid_power are only claimed for
/// a > b > 0; outside that domain the report has claimed = false.
RatioCheckReport ratio_monotonicity_check(const Transform& transform, double a, double b,
                                          std::span<const double> theta_grid);

}  // namespace promot
