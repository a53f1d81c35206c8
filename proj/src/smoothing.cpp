#include "promot/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "promot/error.hpp"

namespace promot {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Streaming mean / variance (Welford).
struct Moments {
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    const double delta = x - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (x - mean);
  }
  double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
  double standard_error() const {
    return n > 1 ? std::sqrt(variance() / static_cast<double>(n)) : 0.0;
  }
};

}  // namespace

SmoothingSpec SmoothingSpec::isotropic(Kernel kernel, Transform transform, double sigma,
                                       Box domain, std::size_t batch) {
  SmoothingSpec spec;
  spec.kernel = kernel;
  spec.transform = transform;
  spec.scales = Eigen::VectorXd::Constant(domain.dimension(), sigma);
  spec.batch = batch;
  spec.domain = std::move(domain);
  return spec;
}

double SmoothingSpec::effective_ridge() const {
  if (ridge) return *ridge;
  const double s = batch > 1 ? static_cast<double>(batch - 1) : 1.0;
  return std::pow(s, -1.0 / 8.0);
}

double SmoothingSpec::s2() const {
  return static_cast<double>(scales.size()) / (scales.array().square().minCoeff());
}

void SmoothingSpec::validate() const {
  if (scales.size() < 1) throw ParameterError("smoothing scales are empty");
  if ((scales.array() <= 0.0).any() || !scales.allFinite()) {
    throw ParameterError("smoothing scales must be positive and finite");
  }
  if (domain.dimension() != scales.size()) {
    throw ParameterError(fmt::format("domain dimension {} does not match scales dimension {}",
                                     domain.dimension(), scales.size()));
  }
  if (batch < 1) throw ParameterError("batch size must be at least 1");
  if (ridge && !(*ridge > 0.0)) throw ParameterError("ridge must be positive");
  if (!std::isfinite(log_offset)) throw ParameterError("log offset must be finite");
}

std::vector<GradientSample> draw_batch(const SmoothingSpec& spec, const Objective& f,
                                       const Eigen::VectorXd& mu, Rng& rng) {
  if (mu.size() != spec.dimension()) {
    throw ParameterError(
        fmt::format("mu has dimension {}, spec has {}", mu.size(), spec.dimension()));
  }
  const ShiftedProductKernel density(spec.kernel, mu, spec.scales);
  std::vector<GradientSample> batch(spec.batch);
  for (GradientSample& s : batch) {
    s.point = density.sample(rng);
    s.score = density.score(s.point);
    s.in_domain = spec.domain.contains(s.point);
    if (s.in_domain) {
      s.f = f(s.point);
      s.log_h = spec.transform.log_eval(s.f);
    } else {
      s.f = std::numeric_limits<double>::quiet_NaN();
      s.log_h = kNegInf;
    }
  }
  return batch;
}

GradientDiagnostics scale_batch(const SmoothingSpec& spec, std::vector<GradientSample>& batch) {
  GradientDiagnostics diag;
  diag.batch_size = batch.size();
  double max_log = kNegInf;
  for (const GradientSample& s : batch) {
    if (!s.in_domain) continue;
    ++diag.in_domain;
    diag.max_abs_theta_f = std::max(diag.max_abs_theta_f, std::abs(spec.transform.theta() * s.f));
    max_log = std::max(max_log, s.log_h);
  }
  diag.starved = diag.in_domain == 0;

  if (spec.scaling == Scaling::kRaw) {
    diag.log_scale = spec.log_offset;
  } else {
    diag.log_scale = std::isfinite(max_log) ? max_log : 0.0;
  }
  for (GradientSample& s : batch) {
    s.h = s.in_domain ? std::exp(s.log_h - diag.log_scale) : 0.0;
    if (!std::isfinite(s.h)) {
      throw OverflowError(
          fmt::format("transformed value exp({}) overflows in raw scaling; set a log offset or "
                      "use batch-max scaling",
                      s.log_h - diag.log_scale),
          spec.transform.theta(), s.f);
    }
  }
  return diag;
}

GradientEstimate plain_estimate(const std::vector<GradientSample>& batch,
                                const GradientDiagnostics& diagnostics) {
  if (batch.empty()) throw ParameterError("empty batch");
  GradientEstimate out;
  out.gradient = Eigen::VectorXd::Zero(batch.front().score.size());
  for (const GradientSample& s : batch) out.gradient += s.h * s.score;
  out.gradient /= static_cast<double>(batch.size());
  out.diagnostics = diagnostics;
  return out;
}

GradientEstimate loo_estimate(const std::vector<GradientSample>& batch,
                              const GradientDiagnostics& diagnostics, double ridge) {
  if (batch.size() < 2) throw ParameterError("leave-one-out estimator requires batch >= 2");
  if (!(ridge > 0.0)) throw ParameterError("ridge must be positive");
  const std::size_t n = batch.size();
  std::vector<double> sq_norm(n);
  double u = 0.0;
  double v = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    sq_norm[k] = batch[k].score.squaredNorm();
    u += batch[k].h * sq_norm[k];
    v += sq_norm[k];
  }
  GradientEstimate out;
  out.diagnostics = diagnostics;
  out.gradient = Eigen::VectorXd::Zero(batch.front().score.size());
  double b_min = std::numeric_limits<double>::infinity();
  double b_max = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k) {
    const double baseline = (u - batch[k].h * sq_norm[k]) / (v - sq_norm[k] + ridge);
    b_min = std::min(b_min, baseline);
    b_max = std::max(b_max, baseline);
    out.gradient += (batch[k].h - baseline) * batch[k].score;
  }
  out.gradient /= static_cast<double>(n);
  out.diagnostics.baseline_min = b_min;
  out.diagnostics.baseline_max = b_max;
  return out;
}

GradientEstimate score_gradient(const SmoothingSpec& spec, const Objective& f,
                                const Eigen::VectorXd& mu, Rng& rng) {
  std::vector<GradientSample> batch = draw_batch(spec, f, mu, rng);
  const GradientDiagnostics diag = scale_batch(spec, batch);
  return plain_estimate(batch, diag);
}

GradientEstimate loo_gradient(const SmoothingSpec& spec, const Objective& f,
                              const Eigen::VectorXd& mu, Rng& rng) {
  if (spec.batch < 2) throw ParameterError("leave-one-out estimator requires batch >= 2");
  std::vector<GradientSample> batch = draw_batch(spec, f, mu, rng);
  const GradientDiagnostics diag = scale_batch(spec, batch);
  return loo_estimate(batch, diag, spec.effective_ridge());
}

GradientEstimate estimate_gradient(Estimator estimator, const SmoothingSpec& spec,
                                   const Objective& f, const Eigen::VectorXd& mu, Rng& rng) {
  return estimator == Estimator::kLoo ? loo_gradient(spec, f, mu, rng)
                                      : score_gradient(spec, f, mu, rng);
}

SmoothedValue smoothed_value(const SmoothingSpec& spec, const Objective& f,
                             const Eigen::VectorXd& mu, std::size_t n, Rng& rng) {
  if (n < 1) throw ParameterError("smoothed_value requires n >= 1");
  if (mu.size() != spec.dimension()) throw ParameterError("mu dimension mismatch");
  const ShiftedProductKernel density(spec.kernel, mu, spec.scales);
  Moments m;
  SmoothedValue out;
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::VectorXd x = density.sample(rng);
    double h = 0.0;
    if (spec.domain.contains(x)) {
      ++out.in_domain;
      const double y = f(x);
      h = std::exp(spec.transform.log_eval(y) - spec.log_offset);
      if (!std::isfinite(h)) {
        throw OverflowError(fmt::format("smoothed value overflows at y = {}", y),
                            spec.transform.theta(), y);
      }
    }
    m.add(h);
  }
  out.value = m.mean;
  out.standard_error = m.standard_error();
  return out;
}

SecondMomentProbe second_moment_probe(const SmoothingSpec& spec, const Objective& f,
                                      const Eigen::VectorXd& mu, std::size_t batches,
                                      Estimator estimator, Rng& rng,
                                      std::optional<double> g_star,
                                      std::optional<double> fisher_information) {
  if (batches < 100) throw ParameterError("second moment probe needs at least 100 batches");
  SmoothingSpec raw = spec;
  raw.scaling = Scaling::kRaw;
  raw.validate();

  Moments norm_moments;
  double sum_h_s = 0.0;
  double sum_h2_s = 0.0;
  double sum_s = 0.0;
  for (std::size_t b = 0; b < batches; ++b) {
    std::vector<GradientSample> batch = draw_batch(raw, f, mu, rng);
    const GradientDiagnostics diag = scale_batch(raw, batch);
    for (const GradientSample& s : batch) {
      const double sq = s.score.squaredNorm();
      sum_h_s += s.h * sq;
      sum_h2_s += s.h * s.h * sq;
      sum_s += sq;
    }
    const GradientEstimate est = estimator == Estimator::kLoo
                                     ? loo_estimate(batch, diag, raw.effective_ridge())
                                     : plain_estimate(batch, diag);
    norm_moments.add(est.gradient.squaredNorm());
  }

  SecondMomentProbe out;
  out.batches = batches;
  out.mean_sq_norm = norm_moments.mean;
  out.standard_error = norm_moments.standard_error();
  const double draws = static_cast<double>(batches * raw.batch);
  const double a = sum_h_s / draws;
  const double denom = (sum_h2_s / draws) * (sum_s / draws);
  out.r_squared = denom > 0.0 ? a * a / denom : 0.0;
  if (g_star) {
    const double info = fisher_information.value_or(raw.kernel.analytic_fisher_information());
    out.bound = (*g_star) * (*g_star) * info * raw.s2();
    out.within_bound = out.mean_sq_norm <= *out.bound + 3.0 * out.standard_error;
  }
  return out;
}

PairedSecondMoments paired_second_moments(const SmoothingSpec& spec, const Objective& f,
                                          const Eigen::VectorXd& mu, std::size_t batches,
                                          Rng& rng) {
  if (batches < 2) throw ParameterError("paired comparison needs at least 2 batches");
  SmoothingSpec raw = spec;
  raw.scaling = Scaling::kRaw;
  raw.validate();
  Moments plain;
  Moments loo;
  Moments diff;
  for (std::size_t b = 0; b < batches; ++b) {
    std::vector<GradientSample> batch = draw_batch(raw, f, mu, rng);
    const GradientDiagnostics diag = scale_batch(raw, batch);
    const double p = plain_estimate(batch, diag).gradient.squaredNorm();
    const double l = loo_estimate(batch, diag, raw.effective_ridge()).gradient.squaredNorm();
    plain.add(p);
    loo.add(l);
    diff.add(l - p);
  }
  PairedSecondMoments out;
  out.plain_mean = plain.mean;
  out.loo_mean = loo.mean;
  out.diff_mean = diff.mean;
  out.diff_standard_error = diff.standard_error();
  out.batches = batches;
  return out;
}

}  // namespace promot
