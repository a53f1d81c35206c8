#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "promot/error.hpp"
#include "promot/objectives.hpp"

using namespace promot;

namespace {

Eigen::VectorXd central_gradient(const Objective& f, const Eigen::VectorXd& x, double h = 1e-6) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd up = x, dn = x;
    up[i] += h;
    dn[i] -= h;
    g[i] = (f(up) - f(dn)) / (2.0 * h);
  }
  return g;
}

}  // namespace

TEST_CASE("benchmark optima") {
  CHECK(ackley(500)(Eigen::VectorXd::Zero(500)) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(rosenbrock(500)(Eigen::VectorXd::Ones(500)) == 0.0);
  CHECK(griewank(5)(Eigen::VectorXd::Zero(5)) == doctest::Approx(0.05).epsilon(1e-14));
  CHECK(*griewank(5).optimum() == doctest::Approx(0.05));
  for (const char* name : {"ackley", "rosenbrock", "griewank"}) {
    const Objective f = benchmark(name, 7);
    CAPTURE(name);
    CHECK(f(*f.maximizer()) == doctest::Approx(*f.optimum()).epsilon(1e-12));
  }
}

TEST_CASE("declared optima are stationary") {
  for (const char* name : {"rosenbrock", "griewank"}) {
    const Objective f = benchmark(name, 6);
    CAPTURE(name);
    CHECK(central_gradient(f, *f.maximizer()).norm() < 1e-6);
  }
  // Ackley is not differentiable at 0; check the radial symmetry instead.
  const Objective a = ackley(4);
  Eigen::VectorXd e(4);
  e << 0.01, 0.0, 0.0, 0.0;
  const double v = a(e);
  for (int i = 1; i < 4; ++i) {
    Eigen::VectorXd p = Eigen::VectorXd::Zero(4);
    p[i] = -0.01;
    CHECK(a(p) == doctest::Approx(v).epsilon(1e-14));
  }
  CHECK(v < 0.0);
}

TEST_CASE("objectives are pure") {
  const Objective f = ackley(3);
  Eigen::VectorXd x(3);
  x << 0.3, -1.7, 2.2;
  const double a = f(x);
  for (int i = 0; i < 10; ++i) CHECK(f(x) == a);
  CHECK_THROWS_AS(f(Eigen::VectorXd::Zero(2)), ParameterError);
}

TEST_CASE("attack loss") {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(3, 2);
  Eigen::VectorXd b(3);
  b << 3.0, 1.0, 0.0;
  const SoftmaxClassifier clf(w, b);
  const AttackProblem p(clf, Eigen::VectorXd::Zero(2), -5.0, 0.0);
  CHECK(p.target == 2);
  CHECK(p.loss(Eigen::VectorXd::Zero(2)) == doctest::Approx(-3.0));

  // Target margin achieved, kappa = 0: only the penalty remains.
  Eigen::MatrixXd w2(3, 2);
  w2 << 0.0, 0.0, 0.0, 0.0, 10.0, 0.0;
  const AttackProblem q(SoftmaxClassifier(w2, b), Eigen::VectorXd::Zero(2), 0.0, 0.3);
  Eigen::VectorXd mu(2);
  mu << 1.0, 2.0;
  CHECK(q.success(mu));
  CHECK(q.loss(mu) == doctest::Approx(-0.3 * std::sqrt(5.0)));
}

TEST_CASE("attack argmax on a 3x3 grid matches brute force") {
  for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
    const SoftmaxClassifier clf = SoftmaxClassifier::synthetic(4, 2, seed);
    Eigen::VectorXd x(2);
    x << 0.4, -0.2;
    const AttackProblem p(clf, x, 0.0, 0.1);
    // Oracle: recompute the loss from the logits directly.
    auto oracle = [&](const Eigen::VectorXd& mu) {
      const Eigen::VectorXd z = clf.logits(x + mu);
      double other = -std::numeric_limits<double>::infinity();
      for (Eigen::Index y = 0; y < z.size(); ++y) {
        if (static_cast<std::size_t>(y) != p.target) other = std::max(other, z[y]);
      }
      return -std::max(other - z[static_cast<Eigen::Index>(p.target)], 0.0) - 0.1 * mu.norm();
    };
    double best_lib = -1e300, best_oracle = -1e300;
    Eigen::VectorXd arg_lib, arg_oracle;
    for (int i = -1; i <= 1; ++i) {
      for (int j = -1; j <= 1; ++j) {
        Eigen::VectorXd mu(2);
        mu << i, j;
        const double l = p.loss(mu), o = oracle(mu);
        CHECK(l == doctest::Approx(o).epsilon(1e-14));
        if (l > best_lib) best_lib = l, arg_lib = mu;
        if (o > best_oracle) best_oracle = o, arg_oracle = mu;
      }
    }
    CHECK(arg_lib == arg_oracle);
  }
}

TEST_CASE("attack success iff zero loss with no penalty") {
  const SoftmaxClassifier clf = SoftmaxClassifier::synthetic(4, 3, 11);
  Eigen::VectorXd x = Eigen::VectorXd::Constant(3, 0.2);
  const AttackProblem p(clf, x, 0.0, 0.0);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 3.0);
  int successes = 0;
  for (int k = 0; k < 500; ++k) {
    Eigen::VectorXd mu(3);
    for (int i = 0; i < 3; ++i) mu[i] = n(rng);
    CHECK(p.success(mu) == (p.loss(mu) == 0.0));
    successes += p.success(mu);
  }
  CHECK(successes > 0);
}

TEST_CASE("landscape maximizer matches a dense grid") {
  const Objective f = landscape_objective();
  const double lo = f.domain().lo[0], hi = f.domain().hi[0];
  const int n = 1000000;
  double best = -1e300, arg = 0.0;
  Eigen::VectorXd x(1);
  for (int i = 0; i <= n; ++i) {
    x[0] = lo + (hi - lo) * i / n;
    const double v = f(x);
    if (v > best) best = v, arg = x[0];
  }
  CHECK(std::abs(arg - (*f.maximizer())[0]) <= (hi - lo) / n);
  CHECK(best == doctest::Approx(*f.optimum()).epsilon(1e-8));
}

TEST_CASE("box") {
  const Box b = Box::cube(2, -1.0, 2.0);
  CHECK(b.diameter() == 3.0);
  Eigen::VectorXd in(2), out(2);
  in << 0.0, 2.0;
  out << 0.0, 2.1;
  CHECK(b.contains(in));
  CHECK_FALSE(b.contains(out));
  CHECK(Box::unbounded(3).contains(Eigen::VectorXd::Constant(3, 1e300)));
}
