#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <utility>

#include <Eigen/Core>

#include "promot/objectives.hpp"
#include "promot/optimizer.hpp"
#include "promot/rng.hpp"
#include "promot/smoothing.hpp"

namespace promot {

enum class Method {
  kPromot,
  kPromotLoo,
  kEpgs,
  kRsgf,
  kZoSgd,
  kZoAdamm,
  kZoSlghd,
  kZoSlghr,
};

/// Ids: promot, promot_loo, epgs, rsgf, zo_sgd, zo_adamm, zo_slghd, zo_slghr.
Method method_from_name(std::string_view name);
std::string_view method_name(Method method);
/// Table-style label, e.g. "ProMoT-loo" or "ZO-SLGHd".
std::string_view method_label(Method method);
/// True for ProMoT, ProMoT-loo and EPGS, which run on the smoothing driver.
bool uses_smoothing_driver(Method method);

/// Hyperparameters of the two-point Gaussian baselines.
struct BaselineSpec {
  Method method = Method::kZoSgd;
  double eta0 = 0.1;
  double sigma0 = 0.1;
  double gamma_dec = 1.0;  // smoothing decrease factor (RSGF, ZO-SLGHd/r)
  double alpha = 0.1;      // sigma step size (ZO-SLGHd)
  double beta1 = 0.9;      // ZO-AdaMM first moment
  double beta2 = 0.5;      // ZO-AdaMM second moment
  std::size_t batch = 50;

  void validate() const;
};

/// Smallest smoothing scale a baseline may reach; lower values are clamped.
inline constexpr double kSigmaFloor = 1e-12;

struct BaselineState {
  Eigen::VectorXd mu;
  double f_center = 0.0;  // f(mu), shared by the two-point differences
  double sigma = 0.0;
  Eigen::VectorXd m;      // ZO-AdaMM moments
  Eigen::VectorXd v;
  Eigen::VectorXd v_hat;
  std::size_t t = 0;
  std::uint64_t evaluations = 0;
  bool sigma_clamped = false;
  double last_grad_norm = 0.0;
  double last_eta = 0.0;
};

/// State at mu0; evaluates f(mu0) once.
BaselineState init_state(const BaselineSpec& spec, const Objective& f, const Eigen::VectorXd& mu0);

/// (1/B) sum_k (f(mu + sigma u_k) - f(mu)) / sigma * u_k with u_k ~ N(0, I).
/// The center value is taken from the state. Also returns the sigma
/// derivative estimate (1/B) sum_k (f(mu + sigma u_k) - f(mu)) (|u_k|^2 - d) / sigma.
struct TwoPointEstimate {
  Eigen::VectorXd gradient;
  double sigma_derivative = 0.0;
};
TwoPointEstimate two_point_estimate(const Objective& f, const BaselineState& state,
                                    std::size_t batch, Rng& rng);

// One ascent step each. Every step spends B evaluations on the perturbed
// points and one on the new center.
void rsgf_step(const BaselineSpec& spec, BaselineState& state, const Objective& f, Rng& rng);
void zo_sgd_step(const BaselineSpec& spec, BaselineState& state, const Objective& f, Rng& rng);
void zo_adamm_step(const BaselineSpec& spec, BaselineState& state, const Objective& f, Rng& rng);
void zo_slghd_step(const BaselineSpec& spec, BaselineState& state, const Objective& f, Rng& rng);
void zo_slghr_step(const BaselineSpec& spec, BaselineState& state, const Objective& f, Rng& rng);

/// Runs a two-point baseline for `iterations` steps from mu0.
/// Randomness comes from derive_seed(seed, kStreamOptimizer).
Trajectory run_baseline(const BaselineSpec& spec, const Objective& f, const Eigen::VectorXd& mu0,
                        std::size_t iterations, std::uint64_t seed);

/// EPGS: Gaussian kernel with the exponential transform exp(theta y) on the
/// ProMoT driver, constant step eta0.
std::pair<SmoothingSpec, ScheduleSpec> epgs_config(double theta, double sigma, double eta0,
                                                   Box domain, std::size_t batch = 50);

}  // namespace promot
