#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "promot/kernels.hpp"

namespace promot {

struct Check {
  std::string name;
  bool passed = false;
  double measured = 0.0;
  double expected = 0.0;
  std::string detail;
};

struct SuiteReport {
  std::string suite;
  std::vector<Check> checks;
  double seconds = 0.0;

  bool passed() const;
  std::size_t failures() const;
};

struct VerifyOptions {
  bool full = false;  // acceptance-size sample counts
  std::uint64_t seed = 20240601;
};

/// A kernel with the constants it is expected to reproduce.
struct KernelExpectation {
  Kernel kernel;
  double fisher_information;
  double curvature;
};

/// The shipped kernels with their analytic I and printed K.
std::vector<KernelExpectation> reference_expectations();

/// I within 1e-3 and K within 5e-3 of the expectations.
SuiteReport verify_constants(const std::vector<KernelExpectation>& expectations);
/// Ratio monotonicity for every family on random (a, b) pairs and sigmoid_power boundedness.
SuiteReport verify_transforms(const VerifyOptions& options);
/// Plain and leave-one-out batch means against a common-random-number
/// finite difference of the smoothed value (Ackley d = 2).
SuiteReport verify_unbiasedness(const VerifyOptions& options);
/// Paired second moments of both estimators on each benchmark at d = 10.
SuiteReport verify_loo(const VerifyOptions& options);
/// E|g_plain|^2 <= g*^2 I S2 on three settings (isotropic and anisotropic).
SuiteReport verify_second_moment(const VerifyOptions& options);
/// |G''| <= g* max(K, I) / sigma^2 on a 201-point grid for three 1-D settings.
SuiteReport verify_lipschitz(const VerifyOptions& options);
/// verify_second_moment followed by verify_lipschitz.
SuiteReport verify_bounds(const VerifyOptions& options);
/// Zeros of G' on the landscape objective against the recorded thresholds.
SuiteReport verify_localization(const VerifyOptions& options);

/// Smallest theta at which the landscape objective's stationary points all
/// fall within 0.25 of x*, per sigma (logistic kernel, exponential transform).
struct LocalizationThreshold {
  double sigma;
  double theta;
};
const std::vector<LocalizationThreshold>& localization_thresholds();
/// Theta values scanned by the localization suite.
const std::vector<double>& localization_theta_grid();
inline constexpr double kLocalizationWindow = 15.0;
inline constexpr double kLocalizationDelta = 0.25;

/// Suite ids: constants, transforms, unbiasedness, loo, bounds, localization.
std::vector<std::string> suite_names();
SuiteReport run_suite(const std::string& name, const VerifyOptions& options);

}  // namespace promot
