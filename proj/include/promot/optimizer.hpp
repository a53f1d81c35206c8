#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "promot/objectives.hpp"
#include "promot/smoothing.hpp"

namespace promot {

enum class ScheduleKind { kIsotropicPoly, kAnisotropicPoly, kConstant, kTable };

ScheduleKind schedule_kind_from_name(std::string_view name);
std::string_view schedule_kind_name(ScheduleKind kind);

/// Step sizes eta_t for the ascent recurrence.
///
/// isotropic_poly: base * (t+1)^-(1/2+gamma), base = sigma^2 / d.
/// anisotropic_poly: base * (t+1)^-(1/2+gamma), base = 1 / S2(Sigma).
/// An explicit eta0 replaces the derived base. constant uses eta0 at every
/// step; table uses table[t] and repeats its last entry.
struct ScheduleSpec {
  ScheduleKind kind = ScheduleKind::kIsotropicPoly;
  double gamma = 0.1;
  std::optional<double> eta0;
  std::vector<double> table;

  void validate(const SmoothingSpec& spec) const;
  double base(const SmoothingSpec& spec) const;
  double step_size(std::size_t t, const SmoothingSpec& spec) const;
};

struct Trajectory {
  std::vector<Eigen::VectorXd> mu;  // mu_0 .. mu_T
  std::vector<double> eta;          // eta_0 .. eta_{T-1}
  std::vector<double> f_mu;         // f(mu_t), t = 0..T
  std::vector<double> grad_norm;    // |g_hat_t|, t = 0..T-1
  std::vector<double> sigma;        // mean smoothing scale in force at step t, t = 0..T
  /// Cumulative objective evaluations after step t (index 0: the f(mu_0) call).
  std::vector<std::uint64_t> evaluations;
  std::uint64_t seed = 0;
  bool sigma_clamped = false;

  std::size_t steps() const { return eta.size(); }
  std::uint64_t total_evaluations() const { return evaluations.empty() ? 0 : evaluations.back(); }
};

/// mu_{t+1} = mu_t + eta_t g_hat_t for t < T with Sigma held fixed.
/// f(mu_t) is evaluated once per step for metrics, so the counter ends at
/// (B + 1) T + 1. Randomness comes from derive_seed(seed, kStreamOptimizer).
/// Throws RunAborted on a non-finite gradient or when |mu|_inf exceeds
/// 1e3 * diam(S).
Trajectory run(const SmoothingSpec& spec, const Objective& f, const Eigen::VectorXd& mu0,
               const ScheduleSpec& schedule, std::size_t iterations, Estimator estimator,
               std::uint64_t seed);

/// (1/2 - gamma) / (2^{1/2 - gamma} - 1), gamma in (0, 1/2).
double c_gamma(double gamma);

/// Sufficient horizon for E|grad G|^2 <= epsilon under the anisotropic
/// polynomial schedule:
/// [C_gamma S2 / eps * (g* + I max(K, I) g*^3 (1 - C/2))]^{2/(1 - 2 gamma)}.
/// C = 0 gives the plain estimator's bound.
double grid_complexity_bound(double gamma, double s2, double g_star, double fisher_information,
                             double curvature, double epsilon, double loo_fraction = 0.0);

}  // namespace promot
