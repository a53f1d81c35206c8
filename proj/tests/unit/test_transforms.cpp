#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "promot/error.hpp"
#include "promot/transforms.hpp"

using namespace promot;

TEST_CASE("closed forms") {
  CHECK(Transform::exponential(2.0).eval(3.0) == doctest::Approx(std::exp(6.0)).epsilon(1e-14));
  CHECK(Transform::exponential(2.0).eval(3.0) == doctest::Approx(403.4288).epsilon(1e-7));
  CHECK(Transform::power(3.0, 0.0).eval(2.0) == doctest::Approx(8.0));
  CHECK(Transform::softplus(2.0).eval(0.5) == doctest::Approx(std::log1p(std::exp(1.0))));
  CHECK(Transform::sinh_shift(0.5, 1.0).eval(1.0) == doctest::Approx(std::sinh(1.0)));
  CHECK(Transform::sigmoid_power(2.0, 3.0).eval(0.2) ==
        doctest::Approx(std::pow(1.0 / (1.0 + std::exp(-0.6)), 2.0)));
  CHECK(Transform::frac_exponential(1.5, 0.5).eval(4.0) == doctest::Approx(std::exp(3.0)));
  // Hybrid on Ackley-sized values.
  const Transform h = Transform::power_exp_hybrid(5.0, 600.0, 10.0);
  for (double y : {-20.0, -5.0, -0.1, 0.0}) {
    CHECK(h.eval(y) == doctest::Approx(std::pow(y + 600.0, 10.0) * std::exp(5.0 * y)).epsilon(1e-12));
  }
}

TEST_CASE("log values") {
  CHECK(Transform::exponential(100.0).log_eval(10.0) == doctest::Approx(1000.0));
  const long double ref = 10.0L * std::log(600.0L);
  CHECK(Transform::power_exp_hybrid(5.0, 600.0, 10.0).log_eval(0.0) ==
        doctest::Approx(static_cast<double>(ref)).epsilon(1e-15));
  CHECK(std::abs(static_cast<double>(ref) - 63.9693) < 1e-4);
  CHECK(Transform::power(3.0, 1.0).log_eval(0.0) == 0.0);
  // log_eval and log(eval) agree wherever eval is representable.
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  const std::vector<Transform> all{Transform::power(2.0, 4.0),           Transform::exponential(1.3),
                                   Transform::frac_exponential(2.0, 0.7), Transform::power_exp_hybrid(1.0, 5.0, 3.0),
                                   Transform::softplus(2.0),             Transform::sinh_shift(1.0, 4.0),
                                   Transform::sigmoid_power(3.0, 2.0)};
  for (const Transform& t : all) {
    for (int i = 0; i < 50; ++i) {
      const double y = u(rng);
      CAPTURE(t.name());
      CAPTURE(y);
      CHECK(t.log_eval(y) == doctest::Approx(std::log(t.eval(y))).epsilon(1e-10));
    }
  }
}

TEST_CASE("domains and overflow") {
  CHECK_THROWS_AS(Transform::power(2.0, 1.0).eval(-1.0), DomainError);
  CHECK_THROWS_AS(Transform::power_exp_hybrid(1.0, 600.0, 10.0).log_eval(-700.0), DomainError);
  CHECK_THROWS_AS(Transform::exponential(100.0).eval(10.0), OverflowError);
  CHECK_NOTHROW(Transform::exponential(100.0).log_eval(10.0));
  CHECK(Transform::sinh_shift(1.0, 2.0).eval(-2.0) == 0.0);
  CHECK_THROWS_AS(Transform::exponential(-1.0), ParameterError);
  CHECK_THROWS_AS(Transform::family_from_name("cubic"), ParameterError);
}

TEST_CASE("ratio monotonicity examples") {
  std::vector<double> grid;
  for (int i = 1; i <= 100; ++i) grid.push_back(0.1 * i);
  auto r = ratio_monotonicity_check(Transform::exponential(1.0), 1.0, 0.5, grid);
  CHECK(r.claimed);
  CHECK(r.passed);
  for (double th : {0.5, 2.0, 7.0}) {
    const Transform t = Transform::exponential(th);
    CHECK(t.eval(1.0) / t.eval(0.5) == doctest::Approx(std::exp(0.5 * th)));
  }
  CHECK(ratio_monotonicity_check(Transform::power(1.0, 1.0), 2.0, 1.0, grid).passed);
  // Independent ratio evaluation for softplus on (0, 20].
  std::vector<double> sp;
  for (int i = 1; i <= 200; ++i) sp.push_back(0.1 * i);
  double prev = 0.0;
  for (double th : sp) {
    const double ratio = std::log1p(std::exp(2.0 * th)) / std::log1p(std::exp(th));
    CHECK(ratio >= prev);
    prev = ratio;
  }
  CHECK(ratio_monotonicity_check(Transform::softplus(1.0), 2.0, 1.0, sp).passed);
}

TEST_CASE("ratio check preconditions") {
  std::vector<double> grid{0.5, 1.0, 2.0, 4.0};
  CHECK(ratio_monotonicity_check(Transform::sigmoid_power(1.0, 1.0), 1.0, -1.0, grid).passed);
  CHECK_THROWS_AS(ratio_monotonicity_check(Transform::sigmoid_power(1.0, 1.0), -1.0, 1.0, grid), ParameterError);
}

TEST_CASE("sigmoid power is bounded") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> y(-10.0, 10.0), th(0.01, 10.0), al(0.01, 5.0);
  for (int i = 0; i < 100000; ++i) {
    const Transform t = Transform::sigmoid_power(th(rng), al(rng));
    const double yy = y(rng);
    const double v = t.eval(yy);
    REQUIRE(v > 0.0);
    REQUIRE(v <= 1.0);
    REQUIRE(t.log_eval(yy) <= 0.0);
  }
  // Far in the tail the value underflows; the log stays finite.
  CHECK(std::isfinite(Transform::sigmoid_power(10.0, 5.0).log_eval(-200.0)));
}
