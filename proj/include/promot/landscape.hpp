#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "promot/kernels.hpp"
#include "promot/objectives.hpp"
#include "promot/transforms.hpp"

namespace promot {

struct SmoothedPoint {
  double value = 0.0;  // G(mu)
  double d1 = 0.0;     // G'(mu)
  double d2 = 0.0;     // G''(mu)
  double abs_error = 0.0;
};

/// G(mu) = int_S g(theta, f(x)) p((x - mu)/sigma) / sigma dx for a 1-D
/// objective, with its first two derivatives, by adaptive quadrature.
///
/// Values are reported in units of exp(log_offset); the default offset is
/// log g(theta, f*) when the objective declares its optimum, so G <= 1.
class Smoothed1D {
 public:
  Smoothed1D(Objective f, Kernel kernel, Transform transform, double sigma,
             std::vector<double> breakpoints = {}, std::optional<double> log_offset = std::nullopt);

  const Kernel& kernel() const { return kernel_; }
  const Transform& transform() const { return transform_; }
  double sigma() const { return sigma_; }
  double log_offset() const { return log_offset_; }

  SmoothedPoint at(double mu) const;
  double value(double mu) const { return at(mu).value; }
  double derivative(double mu) const;

  /// Zeros of G' in [lo, hi]: sign changes on a uniform grid of `grid`
  /// points, each refined by bracketing root finding.
  std::vector<double> stationary_points(double lo, double hi, std::size_t grid) const;

 private:
  std::vector<double> cuts(double mu) const;
  double integrate(double mu, int order, double* error) const;

  Objective f_;
  Kernel kernel_;
  Transform transform_;
  double sigma_;
  std::vector<double> breakpoints_;
  double log_offset_;
  double reach_;  // integration half-width in units of sigma
};

}  // namespace promot
