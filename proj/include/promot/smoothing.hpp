#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "promot/kernels.hpp"
#include "promot/objectives.hpp"
#include "promot/rng.hpp"
#include "promot/transforms.hpp"

namespace promot {

/// How transformed values h = g(theta, f(x)) are scaled inside a batch.
enum class Scaling {
  /// h = exp(log g - log_offset). Unbiased for the smoothed objective
  /// divided by exp(log_offset); errors when h overflows.
  kRaw,
  /// h = exp(log g - max_j log g_j). Each batch is divided by its own
  /// largest value, so only the update direction is preserved.
  kBatchMax,
};

enum class Estimator { kPlain, kLoo };

/// Everything that defines G_{theta,Sigma}: kernel, transform (which carries
/// theta), per-coordinate scales, batch size, ridge and domain box.
struct SmoothingSpec {
  Kernel kernel = Kernel::gaussian();
  Transform transform = Transform::identity();
  Eigen::VectorXd scales;
  std::size_t batch = 50;
  /// Ridge of the leave-one-out baseline; (B - 1)^{-1/8} when unset.
  std::optional<double> ridge;
  Box domain = Box::unbounded(1);
  Scaling scaling = Scaling::kBatchMax;
  double log_offset = 0.0;

  static SmoothingSpec isotropic(Kernel kernel, Transform transform, double sigma, Box domain,
                                 std::size_t batch = 50);

  Eigen::Index dimension() const { return scales.size(); }
  double effective_ridge() const;
  /// S2(Sigma) = d * max_i sigma_i^{-2}.
  double s2() const;
  /// Throws ParameterError when scales, batch, ridge or domain are invalid.
  void validate() const;
};

/// One draw X^(k) with its transformed value and score.
struct GradientSample {
  Eigen::VectorXd point;
  Eigen::VectorXd score;  // gradient of log p_{mu,Sigma}(X) in mu
  double f = 0.0;
  double log_h = 0.0;     // log g(theta, f), -inf outside the domain
  double h = 0.0;         // scaled transformed value, 0 outside the domain
  bool in_domain = false;
};

struct GradientDiagnostics {
  std::size_t batch_size = 0;
  std::size_t in_domain = 0;
  double max_abs_theta_f = 0.0;
  double baseline_min = 0.0;
  double baseline_max = 0.0;
  bool starved = false;  // every draw fell outside the domain
  double log_scale = 0.0;  // h values are g / exp(log_scale)
};

struct GradientEstimate {
  Eigen::VectorXd gradient;
  GradientDiagnostics diagnostics;
};

/// Draws a batch of `spec.batch` points around `mu` and evaluates f on them.
/// Draws outside the domain consume randomness but contribute h = 0.
std::vector<GradientSample> draw_batch(const SmoothingSpec& spec, const Objective& f,
                                       const Eigen::VectorXd& mu, Rng& rng);

/// Applies spec.scaling to the batch's log values in place.
GradientDiagnostics scale_batch(const SmoothingSpec& spec, std::vector<GradientSample>& batch);

/// (1/B) sum_k h_k S_k on an already-scaled batch.
GradientEstimate plain_estimate(const std::vector<GradientSample>& batch,
                                const GradientDiagnostics& diagnostics);

/// (1/B) sum_k (h_k - b_k) S_k with the leave-one-out baseline
/// b_k = (U - h_k |S_k|^2) / (V - |S_k|^2 + ridge). Requires B >= 2.
GradientEstimate loo_estimate(const std::vector<GradientSample>& batch,
                              const GradientDiagnostics& diagnostics, double ridge);

/// Score-function gradient estimate at mu.
GradientEstimate score_gradient(const SmoothingSpec& spec, const Objective& f,
                                const Eigen::VectorXd& mu, Rng& rng);

/// Variance-reduced gradient estimate at mu. Throws ParameterError if B < 2.
GradientEstimate loo_gradient(const SmoothingSpec& spec, const Objective& f,
                              const Eigen::VectorXd& mu, Rng& rng);

GradientEstimate estimate_gradient(Estimator estimator, const SmoothingSpec& spec,
                                   const Objective& f, const Eigen::VectorXd& mu, Rng& rng);

struct SmoothedValue {
  double value = 0.0;  // in units of exp(spec.log_offset)
  double standard_error = 0.0;
  std::size_t in_domain = 0;
};

/// Monte Carlo average of g(theta, f(X)) 1{X in S} over n draws around mu.
/// Always uses raw scaling with spec.log_offset.
SmoothedValue smoothed_value(const SmoothingSpec& spec, const Objective& f,
                             const Eigen::VectorXd& mu, std::size_t n, Rng& rng);

struct SecondMomentProbe {
  double mean_sq_norm = 0.0;  // empirical E|g_hat|^2
  double standard_error = 0.0;
  /// Plug-in (E[h|S|^2])^2 / (E[h^2 |S|^2] E[|S|^2]) over all draws.
  double r_squared = 0.0;
  /// g*^2 I S2(Sigma), when g* was supplied.
  std::optional<double> bound;
  /// mean <= bound * (1 + 3 * relative SE); empty when unverifiable.
  std::optional<bool> within_bound;
  std::size_t batches = 0;
};

/// Empirical second moment of an estimator at fixed mu over `batches`
/// independent batches (>= 100), in raw scaling. `g_star` is the transform
/// at the global optimum, already divided by exp(spec.log_offset).
SecondMomentProbe second_moment_probe(const SmoothingSpec& spec, const Objective& f,
                                      const Eigen::VectorXd& mu, std::size_t batches,
                                      Estimator estimator, Rng& rng,
                                      std::optional<double> g_star = std::nullopt,
                                      std::optional<double> fisher_information = std::nullopt);

struct PairedSecondMoments {
  double plain_mean = 0.0;
  double loo_mean = 0.0;
  double diff_mean = 0.0;  // loo - plain, per batch
  double diff_standard_error = 0.0;
  std::size_t batches = 0;
};

/// Both estimators on the same draws, batch by batch.
PairedSecondMoments paired_second_moments(const SmoothingSpec& spec, const Objective& f,
                                          const Eigen::VectorXd& mu, std::size_t batches,
                                          Rng& rng);

}  // namespace promot
