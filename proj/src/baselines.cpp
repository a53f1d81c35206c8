#include "promot/baselines.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "promot/error.hpp"

namespace promot {
namespace {

struct MethodInfo {
  Method method;
  std::string_view id;
  std::string_view label;
};

constexpr MethodInfo kMethods[] = {
    {Method::kPromot, "promot", "ProMoT"},       {Method::kPromotLoo, "promot_loo", "ProMoT-loo"},
    {Method::kEpgs, "epgs", "EPGS"},             {Method::kRsgf, "rsgf", "RSGF"},
    {Method::kZoSgd, "zo_sgd", "ZO-SGD"},        {Method::kZoAdamm, "zo_adamm", "ZO-AdaMM"},
    {Method::kZoSlghd, "zo_slghd", "ZO-SLGHd"},  {Method::kZoSlghr, "zo_slghr", "ZO-SLGHr"},
};

const MethodInfo& info(Method method) {
  for (const MethodInfo& m : kMethods) {
    if (m.method == method) return m;
  }
  throw ParameterError("unknown method");
}

double coordinate_step(const BaselineSpec& spec, const BaselineState& state) {
  return spec.eta0 / static_cast<double>(state.mu.size() + 4);
}

void set_sigma(BaselineState& state, double sigma) {
  if (!(sigma >= kSigmaFloor)) {
    state.sigma = kSigmaFloor;
    state.sigma_clamped = true;
  } else {
    state.sigma = sigma;
  }
}

void finish_step(const BaselineSpec& spec, BaselineState& state, const Objective& f,
                 const Eigen::VectorXd& gradient, double eta) {
  if (!gradient.allFinite()) {
    throw RunAborted(state.t, fmt::format("non-finite two-point gradient (sigma = {})", state.sigma));
  }
  state.last_grad_norm = gradient.norm();
  state.last_eta = eta;
  state.f_center = f(state.mu);
  state.evaluations += spec.batch + 1;
  ++state.t;
}

}  // namespace

Method method_from_name(std::string_view name) {
  for (const MethodInfo& m : kMethods) {
    if (m.id == name) return m.method;
  }
  throw ParameterError(fmt::format("unknown method '{}'", name));
}

std::string_view method_name(Method method) { return info(method).id; }
std::string_view method_label(Method method) { return info(method).label; }

bool uses_smoothing_driver(Method method) {
  return method == Method::kPromot || method == Method::kPromotLoo || method == Method::kEpgs;
}

void BaselineSpec::validate() const {
  if (uses_smoothing_driver(method)) {
    throw ParameterError(
        fmt::format("{} runs on the smoothing driver, not as a baseline", method_name(method)));
  }
  if (!(eta0 >= 0.0) || !std::isfinite(eta0)) throw ParameterError("eta0 must be nonnegative");
  if (!(sigma0 > 0.0) || !std::isfinite(sigma0)) throw ParameterError("sigma0 must be positive");
  if (!(gamma_dec > 0.0 && gamma_dec <= 1.0)) {
    throw ParameterError(fmt::format("gamma_dec must lie in (0, 1], got {}", gamma_dec));
  }
  if (!(alpha > 0.0)) throw ParameterError("alpha must be positive");
  if (!(beta1 > 0.0 && beta1 < 1.0)) throw ParameterError("beta1 must lie in (0, 1)");
  if (!(beta2 > 0.0 && beta2 < 1.0)) throw ParameterError("beta2 must lie in (0, 1)");
  if (batch < 1) throw ParameterError("batch must be at least 1");
}

BaselineState init_state(const BaselineSpec& spec, const Objective& f, const Eigen::VectorXd& mu0) {
  if (mu0.size() != f.dimension()) throw ParameterError("mu0 dimension mismatch");
  if (!mu0.allFinite()) throw ParameterError("mu0 must be finite");
  BaselineState state;
  state.mu = mu0;
  state.sigma = spec.sigma0;
  state.m = Eigen::VectorXd::Zero(mu0.size());
  state.v = Eigen::VectorXd::Zero(mu0.size());
  state.v_hat = Eigen::VectorXd::Zero(mu0.size());
  state.f_center = f(mu0);
  state.evaluations = 1;
  return state;
}

TwoPointEstimate two_point_estimate(const Objective& f, const BaselineState& state,
                                    std::size_t batch, Rng& rng) {
  if (batch < 1) throw ParameterError("batch must be at least 1");
  const Eigen::Index d = state.mu.size();
  std::normal_distribution<double> normal(0.0, 1.0);
  TwoPointEstimate out;
  out.gradient = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd u(d);
  for (std::size_t k = 0; k < batch; ++k) {
    for (Eigen::Index i = 0; i < d; ++i) u[i] = normal(rng);
    const double diff = f(state.mu + state.sigma * u) - state.f_center;
    out.gradient += (diff / state.sigma) * u;
    out.sigma_derivative += diff * (u.squaredNorm() - static_cast<double>(d)) / state.sigma;
  }
  out.gradient /= static_cast<double>(batch);
  out.sigma_derivative /= static_cast<double>(batch);
  return out;
}

void rsgf_step(const BaselineSpec& spec, BaselineState& state, const Objective& f, Rng& rng) {
  const TwoPointEstimate est = two_point_estimate(f, state, spec.batch, rng);
  state.mu += spec.eta0 * est.gradient;
  set_sigma(state, spec.sigma0 * std::pow(spec.gamma_dec, static_cast<double>(state.t + 1)));
  finish_step(spec, state, f, est.gradient, spec.eta0);
}

void zo_sgd_step(const BaselineSpec& spec, BaselineState& state, const Objective& f, Rng& rng) {
  const TwoPointEstimate est = two_point_estimate(f, state, spec.batch, rng);
  const double eta = coordinate_step(spec, state);
  state.mu += eta * est.gradient;
  finish_step(spec, state, f, est.gradient, eta);
}

void zo_adamm_step(const BaselineSpec& spec, BaselineState& state, const Objective& f, Rng& rng) {
  constexpr double kEpsilon = 1e-8;
  const TwoPointEstimate est = two_point_estimate(f, state, spec.batch, rng);
  state.m = spec.beta1 * state.m + (1.0 - spec.beta1) * est.gradient;
  state.v = spec.beta2 * state.v + (1.0 - spec.beta2) * est.gradient.cwiseAbs2();
  state.v_hat = state.v_hat.cwiseMax(state.v);
  const double eta = spec.eta0 / std::sqrt(static_cast<double>(state.t + 1));
  state.mu.array() += eta * state.m.array() / (state.v_hat.array().sqrt() + kEpsilon);
  finish_step(spec, state, f, est.gradient, eta);
}

void zo_slghd_step(const BaselineSpec& spec, BaselineState& state, const Objective& f, Rng& rng) {
  const TwoPointEstimate est = two_point_estimate(f, state, spec.batch, rng);
  const double eta = coordinate_step(spec, state);
  state.mu += eta * est.gradient;
  const double proposal = state.sigma + spec.alpha * est.sigma_derivative;
  set_sigma(state, std::min(proposal, spec.gamma_dec * state.sigma));
  finish_step(spec, state, f, est.gradient, eta);
}

void zo_slghr_step(const BaselineSpec& spec, BaselineState& state, const Objective& f, Rng& rng) {
  const TwoPointEstimate est = two_point_estimate(f, state, spec.batch, rng);
  const double eta = coordinate_step(spec, state);
  state.mu += eta * est.gradient;
  set_sigma(state, spec.sigma0 * std::pow(spec.gamma_dec, static_cast<double>(state.t + 1)));
  finish_step(spec, state, f, est.gradient, eta);
}

Trajectory run_baseline(const BaselineSpec& spec, const Objective& f, const Eigen::VectorXd& mu0,
                        std::size_t iterations, std::uint64_t seed) {
  spec.validate();
  if (iterations < 1) throw ParameterError("iterations must be at least 1");
  using StepFn = void (*)(const BaselineSpec&, BaselineState&, const Objective&, Rng&);
  StepFn step = nullptr;
  switch (spec.method) {
    case Method::kRsgf: step = rsgf_step; break;
    case Method::kZoSgd: step = zo_sgd_step; break;
    case Method::kZoAdamm: step = zo_adamm_step; break;
    case Method::kZoSlghd: step = zo_slghd_step; break;
    case Method::kZoSlghr: step = zo_slghr_step; break;
    default: throw ParameterError("not a baseline method");
  }

  Rng rng(derive_seed(seed, kStreamOptimizer));
  const double guard = 1e3 * f.domain().diameter();
  BaselineState state = init_state(spec, f, mu0);

  Trajectory traj;
  traj.seed = seed;
  traj.mu.reserve(iterations + 1);
  traj.mu.push_back(state.mu);
  traj.f_mu.push_back(state.f_center);
  traj.sigma.push_back(state.sigma);
  traj.evaluations.push_back(state.evaluations);
  for (std::size_t t = 0; t < iterations; ++t) {
    step(spec, state, f, rng);
    if (std::isfinite(guard) && state.mu.cwiseAbs().maxCoeff() > guard) {
      throw RunAborted(t, fmt::format("|mu|_inf = {} exceeds divergence guard {}",
                                      state.mu.cwiseAbs().maxCoeff(), guard));
    }
    traj.eta.push_back(state.last_eta);
    traj.grad_norm.push_back(state.last_grad_norm);
    traj.mu.push_back(state.mu);
    traj.f_mu.push_back(state.f_center);
    traj.sigma.push_back(state.sigma);
    traj.evaluations.push_back(state.evaluations);
  }
  traj.sigma_clamped = state.sigma_clamped;
  return traj;
}

std::pair<SmoothingSpec, ScheduleSpec> epgs_config(double theta, double sigma, double eta0,
                                                   Box domain, std::size_t batch) {
  SmoothingSpec spec = SmoothingSpec::isotropic(Kernel::gaussian(), Transform::exponential(theta),
                                                sigma, std::move(domain), batch);
  ScheduleSpec schedule;
  schedule.kind = ScheduleKind::kConstant;
  schedule.eta0 = eta0;
  return {std::move(spec), std::move(schedule)};
}

}  // namespace promot
