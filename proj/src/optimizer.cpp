#include "promot/optimizer.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "promot/error.hpp"
#include "promot/rng.hpp"

namespace promot {

ScheduleKind schedule_kind_from_name(std::string_view name) {
  if (name == "isotropic_poly") return ScheduleKind::kIsotropicPoly;
  if (name == "anisotropic_poly") return ScheduleKind::kAnisotropicPoly;
  if (name == "constant") return ScheduleKind::kConstant;
  if (name == "table") return ScheduleKind::kTable;
  throw ParameterError(fmt::format("unknown schedule kind '{}'", name));
}

std::string_view schedule_kind_name(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::kIsotropicPoly: return "isotropic_poly";
    case ScheduleKind::kAnisotropicPoly: return "anisotropic_poly";
    case ScheduleKind::kConstant: return "constant";
    case ScheduleKind::kTable: return "table";
  }
  return "unknown";
}

void ScheduleSpec::validate(const SmoothingSpec& spec) const {
  switch (kind) {
    case ScheduleKind::kIsotropicPoly:
    case ScheduleKind::kAnisotropicPoly:
      if (!(gamma > 0.0 && gamma < 0.5)) {
        throw ParameterError(fmt::format("schedule gamma must lie in (0, 1/2), got {}", gamma));
      }
      if (kind == ScheduleKind::kIsotropicPoly && !eta0 &&
          spec.scales.maxCoeff() != spec.scales.minCoeff()) {
        throw ParameterError("isotropic_poly without eta0 needs equal scales");
      }
      break;
    case ScheduleKind::kConstant:
      if (!eta0) throw ParameterError("constant schedule requires eta0");
      break;
    case ScheduleKind::kTable:
      if (table.empty()) throw ParameterError("table schedule is empty");
      for (double v : table) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
          throw ParameterError("table step sizes must be finite and nonnegative");
        }
      }
      break;
  }
  if (eta0 && (!(*eta0 >= 0.0) || !std::isfinite(*eta0))) {
    throw ParameterError("eta0 must be finite and nonnegative");
  }
}

double ScheduleSpec::base(const SmoothingSpec& spec) const {
  if (eta0) return *eta0;
  if (kind == ScheduleKind::kIsotropicPoly) {
    const double s = spec.scales[0];
    return s * s / static_cast<double>(spec.dimension());
  }
  return 1.0 / spec.s2();
}

double ScheduleSpec::step_size(std::size_t t, const SmoothingSpec& spec) const {
  switch (kind) {
    case ScheduleKind::kIsotropicPoly:
    case ScheduleKind::kAnisotropicPoly:
      return base(spec) * std::pow(static_cast<double>(t + 1), -(0.5 + gamma));
    case ScheduleKind::kConstant:
      return *eta0;
    case ScheduleKind::kTable:
      return t < table.size() ? table[t] : table.back();
  }
  return 0.0;
}

Trajectory run(const SmoothingSpec& spec, const Objective& f, const Eigen::VectorXd& mu0,
               const ScheduleSpec& schedule, std::size_t iterations, Estimator estimator,
               std::uint64_t seed) {
  if (iterations < 1) throw ParameterError("iterations must be at least 1");
  if (mu0.size() != spec.dimension()) throw ParameterError("mu0 dimension mismatch");
  if (!mu0.allFinite()) throw ParameterError("mu0 must be finite");
  if (estimator == Estimator::kLoo && spec.batch < 2) {
    throw ParameterError("leave-one-out estimator requires batch >= 2");
  }
  spec.validate();
  schedule.validate(spec);

  Rng rng(derive_seed(seed, kStreamOptimizer));
  const double guard = 1e3 * spec.domain.diameter();
  const double mean_sigma = spec.scales.mean();

  Trajectory traj;
  traj.seed = seed;
  traj.mu.reserve(iterations + 1);
  traj.mu.push_back(mu0);
  traj.f_mu.push_back(f(mu0));
  traj.sigma.push_back(mean_sigma);
  std::uint64_t evals = 1;
  traj.evaluations.push_back(evals);

  Eigen::VectorXd mu = mu0;
  for (std::size_t t = 0; t < iterations; ++t) {
    const GradientEstimate est = estimate_gradient(estimator, spec, f, mu, rng);
    if (!est.gradient.allFinite()) {
      throw RunAborted(t, fmt::format("non-finite gradient (max |theta f| = {}, in-domain {}/{})",
                                      est.diagnostics.max_abs_theta_f, est.diagnostics.in_domain,
                                      est.diagnostics.batch_size));
    }
    const double eta = schedule.step_size(t, spec);
    mu += eta * est.gradient;
    if (std::isfinite(guard) && mu.cwiseAbs().maxCoeff() > guard) {
      throw RunAborted(t, fmt::format("|mu|_inf = {} exceeds divergence guard {}",
                                      mu.cwiseAbs().maxCoeff(), guard));
    }
    evals += spec.batch + 1;
    traj.eta.push_back(eta);
    traj.grad_norm.push_back(est.gradient.norm());
    traj.mu.push_back(mu);
    traj.f_mu.push_back(f(mu));
    traj.sigma.push_back(mean_sigma);
    traj.evaluations.push_back(evals);
  }
  return traj;
}

double c_gamma(double gamma) {
  if (!(gamma > 0.0 && gamma < 0.5)) {
    throw ParameterError(fmt::format("gamma must lie in (0, 1/2), got {}", gamma));
  }
  return (0.5 - gamma) / (std::pow(2.0, 0.5 - gamma) - 1.0);
}

double grid_complexity_bound(double gamma, double s2, double g_star, double fisher_information,
                             double curvature, double epsilon, double loo_fraction) {
  const double cg = c_gamma(gamma);
  if (!(s2 > 0.0) || !(epsilon > 0.0) || !(g_star >= 0.0) || !(fisher_information > 0.0) ||
      !(curvature > 0.0)) {
    throw ParameterError("complexity bound needs positive S2, epsilon, I, K and g* >= 0");
  }
  if (!(loo_fraction >= 0.0 && loo_fraction <= 1.0)) {
    throw ParameterError("variance reduction fraction must lie in [0, 1]");
  }
  const double inner = g_star + fisher_information * std::max(curvature, fisher_information) *
                                    g_star * g_star * g_star * (1.0 - loo_fraction / 2.0);
  return std::pow(cg * s2 / epsilon * inner, 2.0 / (1.0 - 2.0 * gamma));
}

}  // namespace promot
