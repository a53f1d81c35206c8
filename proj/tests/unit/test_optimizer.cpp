#include <doctest.h>

#include <cmath>

#include <boost/math/special_functions/zeta.hpp>

#include "promot/error.hpp"
#include "promot/optimizer.hpp"

using namespace promot;

namespace {

SmoothingSpec ackley_spec(Eigen::Index d, double sigma) {
  return SmoothingSpec::isotropic(Kernel::logistic(), Transform::power_exp_hybrid(5.0, 600.0, 10.0), sigma,
                                  ackley(d).domain(), 10);
}

}  // namespace

TEST_CASE("step size bases") {
  SmoothingSpec spec = SmoothingSpec::isotropic(Kernel::gaussian(), Transform::identity(), 0.5, Box::unbounded(500));
  ScheduleSpec s;
  s.kind = ScheduleKind::kIsotropicPoly;
  CHECK(s.base(spec) == doctest::Approx(5e-4));
  CHECK(s.step_size(0, spec) == doctest::Approx(5e-4));
  CHECK(s.step_size(3, spec) == doctest::Approx(5e-4 * std::pow(4.0, -0.6)));
  spec.scales[7] = 0.25;
  s.kind = ScheduleKind::kAnisotropicPoly;
  CHECK(s.base(spec) == doctest::Approx(1.0 / (500.0 / 0.0625)));
  s.eta0 = 0.3;
  CHECK(s.base(spec) == 0.3);
  ScheduleSpec c;
  c.kind = ScheduleKind::kConstant;
  c.eta0 = 0.2;
  CHECK(c.step_size(999, spec) == 0.2);
  ScheduleSpec t;
  t.kind = ScheduleKind::kTable;
  t.table = {1.0, 0.5};
  CHECK(t.step_size(0, spec) == 1.0);
  CHECK(t.step_size(5, spec) == 0.5);
  ScheduleSpec bad;
  bad.kind = ScheduleKind::kConstant;
  CHECK_THROWS_AS(bad.validate(spec), ParameterError);
}

TEST_CASE("polynomial schedule is decreasing and square summable") {
  const SmoothingSpec spec = SmoothingSpec::isotropic(Kernel::gaussian(), Transform::identity(), 1.0, Box::unbounded(1));
  ScheduleSpec s;
  s.gamma = 0.1;
  const std::size_t T = 1000000;
  double prev = s.step_size(0, spec) + 1.0, sum = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    const double e = s.step_size(t, spec);
    REQUIRE(e < prev);
    prev = e;
    sum += e * e;
  }
  // sum_{n<=T} n^{-p} = zeta(p) - T^{1-p}/(p-1) + T^{-p}/2 + O(T^{-p-1}).
  const double p = 1.0 + 2.0 * s.gamma;
  const double oracle = boost::math::zeta(p) - std::pow(double(T), 1.0 - p) / (p - 1.0) + 0.5 * std::pow(double(T), -p);
  CHECK(sum == doctest::Approx(oracle).epsilon(1e-9));
}

TEST_CASE("complexity constant") {
  CHECK(c_gamma(1e-9) == doctest::Approx(0.5 / (std::sqrt(2.0) - 1.0)).epsilon(1e-7));
  CHECK(0.5 / (std::sqrt(2.0) - 1.0) == doctest::Approx(1.2071).epsilon(1e-4));
  CHECK(c_gamma(0.25) == doctest::Approx(0.25 / (std::pow(2.0, 0.25) - 1.0)).epsilon(1e-14));
  CHECK_THROWS_AS(c_gamma(0.5), ParameterError);
  const double gamma = 0.1, s2 = 40.0, g = 2.0, I = 1.0 / 3.0, K = 0.38496, eps = 0.01;
  const double plain = std::pow(c_gamma(gamma) * s2 / eps * (g + I * std::max(K, I) * g * g * g), 2.0 / (1.0 - 2.0 * gamma));
  CHECK(grid_complexity_bound(gamma, s2, g, I, K, eps) == doctest::Approx(plain).epsilon(1e-12));
  CHECK(grid_complexity_bound(gamma, s2, g, I, K, eps, 0.0) == grid_complexity_bound(gamma, s2, g, I, K, eps));
  CHECK(grid_complexity_bound(gamma, s2, g, I, K, eps, 0.5) < plain);
}

TEST_CASE("zero step sizes leave mu fixed") {
  const Objective f = ackley(3);
  const SmoothingSpec spec = ackley_spec(3, 0.5);
  ScheduleSpec s;
  s.kind = ScheduleKind::kTable;
  s.table = {0.0};
  const Eigen::VectorXd mu0 = Eigen::VectorXd::Constant(3, 1.5);
  const Trajectory t = run(spec, f, mu0, s, 25, Estimator::kLoo, 3);
  for (const auto& m : t.mu) CHECK(m == mu0);
}

TEST_CASE("trajectory bookkeeping and determinism") {
  const Objective f = ackley(5);
  const SmoothingSpec spec = ackley_spec(5, 0.5);
  ScheduleSpec s;
  s.kind = ScheduleKind::kConstant;
  s.eta0 = 0.5;
  const Eigen::VectorXd mu0 = Eigen::VectorXd::Constant(5, 3.0);
  const Trajectory a = run(spec, f, mu0, s, 40, Estimator::kPlain, 9);
  const Trajectory b = run(spec, f, mu0, s, 40, Estimator::kPlain, 9);
  const Trajectory c = run(spec, f, mu0, s, 40, Estimator::kPlain, 10);
  CHECK(a.mu.size() == 41);
  CHECK(a.eta.size() == 40);
  CHECK(a.grad_norm.size() == 40);
  CHECK(a.f_mu.size() == 41);
  CHECK(a.total_evaluations() == (10 + 1) * 40 + 1);
  for (std::size_t t = 0; t <= 40; ++t) CHECK(a.f_mu[t] == f(a.mu[t]));
  CHECK(a.mu.back() == b.mu.back());
  CHECK(a.mu.back() != c.mu.back());
  // One step is mu + eta * g_hat with g_hat from the optimizer stream.
  Rng rng(derive_seed(9, kStreamOptimizer));
  const Eigen::VectorXd g = score_gradient(spec, f, mu0, rng).gradient;
  CHECK((a.mu[1] - (mu0 + 0.5 * g)).norm() < 1e-14);
}

TEST_CASE("runaway iterates abort the run") {
  const Objective f = ackley(2);
  const SmoothingSpec spec = ackley_spec(2, 0.5);
  ScheduleSpec s;
  s.kind = ScheduleKind::kConstant;
  s.eta0 = 1e9;
  CHECK_THROWS_AS(run(spec, f, Eigen::VectorXd::Constant(2, 3.0), s, 100, Estimator::kPlain, 1), RunAborted);
}

TEST_CASE("schedule names") {
  for (auto k : {ScheduleKind::kIsotropicPoly, ScheduleKind::kAnisotropicPoly, ScheduleKind::kConstant, ScheduleKind::kTable}) {
    CHECK(schedule_kind_from_name(schedule_kind_name(k)) == k);
  }
  CHECK_THROWS_AS(schedule_kind_from_name("cosine"), ParameterError);
}
