#include "promot/landscape.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>
#include <fmt/format.h>

#include "promot/error.hpp"

namespace promot {

Smoothed1D::Smoothed1D(Objective f, Kernel kernel, Transform transform, double sigma,
                       std::vector<double> breakpoints, std::optional<double> log_offset)
    : f_(std::move(f)),
      kernel_(kernel),
      transform_(transform),
      sigma_(sigma),
      breakpoints_(std::move(breakpoints)) {
  if (f_.dimension() != 1) throw ParameterError("smoothed landscapes need a 1-D objective");
  if (!(sigma_ > 0.0) || !std::isfinite(sigma_)) throw ParameterError("sigma must be positive");
  if (log_offset) {
    log_offset_ = *log_offset;
  } else if (f_.optimum()) {
    log_offset_ = transform_.log_eval(*f_.optimum());
    if (!std::isfinite(log_offset_)) log_offset_ = 0.0;
  } else {
    log_offset_ = 0.0;
  }
  reach_ = kernel_.truncation_radius(1e-15);
}

std::vector<double> Smoothed1D::cuts(double mu) const {
  const double lo = std::max(f_.domain().lo[0], mu - reach_ * sigma_);
  const double hi = std::min(f_.domain().hi[0], mu + reach_ * sigma_);
  std::vector<double> points{lo, hi};
  auto add = [&](double x) {
    if (x > lo && x < hi) points.push_back(x);
  };
  for (double b : breakpoints_) add(b);
  for (double k : {-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0}) add(mu + k * sigma_);
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());
  return points;
}

double Smoothed1D::integrate(double mu, int order, double* error) const {
  using boost::math::quadrature::gauss_kronrod;
  // Integrate in standardized units x = mu + sigma z so the kernel has unit
  // width whatever sigma is.
  const std::vector<double> points = cuts(mu);
  const double s = sigma_;
  Eigen::VectorXd point(1);
  auto integrand = [&](double z) {
    point[0] = mu + s * z;
    const double h = std::exp(transform_.log_eval(f_(point)) - log_offset_);
    switch (order) {
      case 0: return h * kernel_.density(z);
      case 1: return -h * kernel_.density_d1(z) / s;
      default: return h * kernel_.density_d2(z) / (s * s);
    }
  };
  double total = 0.0;
  double err_total = 0.0;
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    const double za = (points[i] - mu) / s;
    const double zb = (points[i + 1] - mu) / s;
    if (!(za < zb)) continue;
    double err = 0.0;
    total += gauss_kronrod<double, 61>::integrate(integrand, za, zb, 12, 1e-11, &err);
    err_total += err;
  }
  if (error) *error = err_total;
  return total;
}

SmoothedPoint Smoothed1D::at(double mu) const {
  SmoothedPoint out;
  double e0 = 0.0;
  double e1 = 0.0;
  double e2 = 0.0;
  out.value = integrate(mu, 0, &e0);
  out.d1 = integrate(mu, 1, &e1);
  out.d2 = integrate(mu, 2, &e2);
  out.abs_error = std::max({e0, e1, e2});
  return out;
}

double Smoothed1D::derivative(double mu) const { return integrate(mu, 1, nullptr); }

std::vector<double> Smoothed1D::stationary_points(double lo, double hi, std::size_t grid) const {
  if (grid < 2 || !(lo < hi)) throw ParameterError("stationary point scan needs lo < hi, grid >= 2");
  std::vector<double> mus(grid);
  std::vector<double> g(grid);
  for (std::size_t i = 0; i < grid; ++i) {
    mus[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(grid - 1);
    g[i] = derivative(mus[i]);
  }
  std::vector<double> roots;
  for (std::size_t i = 0; i + 1 < grid; ++i) {
    if (g[i] == 0.0) {
      roots.push_back(mus[i]);
      continue;
    }
    if ((g[i] < 0.0) == (g[i + 1] < 0.0) || g[i + 1] == 0.0) continue;
    std::uintmax_t iters = 100;
    const auto bracket = boost::math::tools::toms748_solve(
        [this](double m) { return derivative(m); }, mus[i], mus[i + 1], g[i], g[i + 1],
        boost::math::tools::eps_tolerance<double>(40), iters);
    roots.push_back(0.5 * (bracket.first + bracket.second));
  }
  if (g.back() == 0.0) roots.push_back(mus.back());
  return roots;
}

}  // namespace promot
