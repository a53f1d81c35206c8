#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "promot/rng.hpp"

namespace promot {

enum class KernelFamily {
  kGaussian,
  kLogistic,
  kStudentT,
  kHyperbolicSecant,
  kGeneralizedGaussian,
};

/// A one-dimensional symmetric unimodal smoothing density p(z).
///
/// Kernels are immutable values. Besides the density itself they expose the
/// first two derivatives and the score s = p'/p, which the gradient
/// estimators and the curvature/variance bounds are built from.
class Kernel {
 public:
  static Kernel gaussian();
  static Kernel logistic();
  static Kernel student_t(double nu);
  static Kernel hyperbolic_secant();
  static Kernel generalized_gaussian(double beta);

  /// Parses "gaussian", "logistic", "student_t", "hypsec", "gen_gaussian".
  /// `param` is nu for student_t and beta for gen_gaussian, ignored otherwise.
  static Kernel from_name(std::string_view name, std::optional<double> param = std::nullopt);

  KernelFamily family() const { return family_; }
  /// Shape parameter (nu or beta). Zero for parameter-free families.
  double param() const { return param_; }
  /// Config-style identifier, e.g. "student_t(3)".
  std::string name() const;

  double density(double z) const;
  double log_density(double z) const;
  double density_d1(double z) const;
  double density_d2(double z) const;
  /// s(z) = p'(z) / p(z). Odd in z.
  double score(double z) const;
  /// s'(z); p'' = p * (s^2 + s').
  double score_d1(double z) const;
  double cdf(double z) const;

  double sample(Rng& rng) const;
  /// `n` i.i.d. draws. Throws ParameterError when n == 0.
  std::vector<double> sample(Rng& rng, std::size_t n) const;

  /// Closed-form Fisher information int (p')^2 / p where one exists.
  double analytic_fisher_information() const;

  /// Radius beyond which the two-sided tail mass is below `mass`.
  double truncation_radius(double mass) const;

  bool operator==(const Kernel&) const = default;

 private:
  Kernel(KernelFamily family, double param);

  KernelFamily family_;
  double param_;
  double log_norm_;  // log of the density normalizing constant
};

struct KernelConstants {
  double fisher_information = 0.0;  // I
  double curvature = 0.0;           // K
  double abs_error = 0.0;           // combined quadrature error estimate
};

/// I = int (p')^2/p and K = int |p''| by adaptive Gauss-Kronrod quadrature.
/// The |p''| integral is split at the sign changes of p''.
/// Throws AccuracyError when the error estimate exceeds `tolerance`.
KernelConstants compute_constants(const Kernel& kernel, double tolerance = 1e-9);

/// Published reference constants for the shipped kernels (Gaussian, logistic,
/// Student-t with nu in {1, 3, 10}, hyperbolic secant, generalized Gaussian
/// with beta = 4). Empty for other parameterizations.
std::optional<KernelConstants> reference_constants(const Kernel& kernel);

/// The kernels shipped with the toolkit, in table order.
std::vector<Kernel> shipped_kernels();

/// Product density prod_i sigma_i^{-1} p((x_i - mu_i) / sigma_i).
class ShiftedProductKernel {
 public:
  ShiftedProductKernel(Kernel base, Eigen::VectorXd center, Eigen::VectorXd scales);

  const Kernel& base() const { return base_; }
  const Eigen::VectorXd& center() const { return center_; }
  const Eigen::VectorXd& scales() const { return scales_; }
  Eigen::Index dimension() const { return center_.size(); }

  double log_density(const Eigen::VectorXd& x) const;
  /// Gradient of log density with respect to the center:
  /// S_i = -(1/sigma_i) s((x_i - mu_i) / sigma_i).
  Eigen::VectorXd score(const Eigen::VectorXd& x) const;
  Eigen::VectorXd sample(Rng& rng) const;

 private:
  Kernel base_;
  Eigen::VectorXd center_;
  Eigen::VectorXd scales_;
};

}  // namespace promot
