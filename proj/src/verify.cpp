#include "promot/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>

#include <fmt/format.h>

#include "promot/error.hpp"
#include "promot/landscape.hpp"
#include "promot/objectives.hpp"
#include "promot/rng.hpp"
#include "promot/smoothing.hpp"
#include "promot/transforms.hpp"

namespace promot {
namespace {

// One-sided 99% normal quantile.
constexpr double kZ99 = 2.3263478740408408;

struct Welford {
  Eigen::VectorXd mean;
  Eigen::VectorXd m2;
  std::size_t n = 0;

  explicit Welford(Eigen::Index d) : mean(Eigen::VectorXd::Zero(d)), m2(Eigen::VectorXd::Zero(d)) {}
  void add(const Eigen::VectorXd& x) {
    ++n;
    const Eigen::VectorXd delta = x - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta.cwiseProduct(x - mean);
  }
  Eigen::VectorXd standard_error() const {
    return (m2 / static_cast<double>(n - 1) / static_cast<double>(n)).cwiseSqrt();
  }
};

template <typename Body>
SuiteReport timed(std::string name, Body body) {
  const auto start = std::chrono::steady_clock::now();
  SuiteReport report;
  report.suite = std::move(name);
  body(report);
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

void add_check(SuiteReport& r, std::string name, bool ok, double measured, double expected,
               std::string detail = {}) {
  r.checks.push_back(Check{std::move(name), ok, measured, expected, std::move(detail)});
}

// Central difference of the smoothed value along coordinate i with common
// random numbers: both sides share every kernel draw.
std::pair<double, double> crn_difference(const SmoothingSpec& spec, const Objective& f,
                                         const Eigen::VectorXd& mu, Eigen::Index i, double step,
                                         std::size_t n, Rng& rng) {
  const ShiftedProductKernel zero(spec.kernel, Eigen::VectorXd::Zero(mu.size()), spec.scales);
  Eigen::VectorXd plus = mu;
  Eigen::VectorXd minus = mu;
  plus[i] += step;
  minus[i] -= step;
  auto h = [&](const Eigen::VectorXd& x) {
    if (!spec.domain.contains(x)) return 0.0;
    return std::exp(spec.transform.log_eval(f(x)) - spec.log_offset);
  };
  Welford w(1);
  Eigen::VectorXd value(1);
  for (std::size_t k = 0; k < n; ++k) {
    const Eigen::VectorXd offset = zero.sample(rng);
    value[0] = (h(plus + offset) - h(minus + offset)) / (2.0 * step);
    w.add(value);
  }
  return {w.mean[0], w.standard_error()[0]};
}

struct BenchmarkPreset {
  std::string name;
  double init;
  double sigma;
  double theta;
  double c;
};

// ProMoT-loo rows of the benchmark hyperparameter tables. The probe point
// is halfway between the usual initial mean and the maximizer.
const std::vector<BenchmarkPreset>& loo_presets() {
  static const std::vector<BenchmarkPreset> presets{
      {"ackley", 2.5, 0.1, 1.0, 600.0},
      {"rosenbrock", 2.0, 0.1, 0.001, 6000.0},
      {"griewank", 2.5, 1.0, 1.0, 1000.0},
  };
  return presets;
}

std::vector<double> log_grid(double lo, double hi, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(n - 1);
    out[i] = std::exp(std::log(lo) + t * (std::log(hi) - std::log(lo)));
  }
  return out;
}

}  // namespace

bool SuiteReport::passed() const { return failures() == 0; }

std::size_t SuiteReport::failures() const {
  return static_cast<std::size_t>(
      std::count_if(checks.begin(), checks.end(), [](const Check& c) { return !c.passed; }));
}

std::vector<KernelExpectation> reference_expectations() {
  std::vector<KernelExpectation> out;
  for (const Kernel& k : shipped_kernels()) {
    const auto ref = reference_constants(k);
    out.push_back({k, k.analytic_fisher_information(), ref->curvature});
  }
  return out;
}

SuiteReport verify_constants(const std::vector<KernelExpectation>& expectations) {
  return timed("constants", [&](SuiteReport& r) {
    for (const KernelExpectation& e : expectations) {
      const std::string name = e.kernel.name();
      try {
        const KernelConstants c = compute_constants(e.kernel);
        const double di = std::abs(c.fisher_information - e.fisher_information);
        const double dk = std::abs(c.curvature - e.curvature);
        add_check(r, name + " I", di <= 1e-3, c.fisher_information, e.fisher_information,
                  fmt::format("|diff| = {:.3g}, tolerance 1e-3", di));
        add_check(r, name + " K", dk <= 5e-3, c.curvature, e.curvature,
                  fmt::format("|diff| = {:.3g}, tolerance 5e-3", dk));
      } catch (const Error& ex) {
        add_check(r, name + " quadrature", false, 0.0, 0.0, ex.what());
      }
    }
  });
}

SuiteReport verify_transforms(const VerifyOptions& options) {
  return timed("transforms", [&](SuiteReport& r) {
    struct Family {
      Transform t;
      double lo;
      double hi;
    };
    const std::vector<Family> families{
        {Transform::power(1.0, 1.0), -1.0, 20.0},
        {Transform::exponential(1.0), -20.0, 20.0},
        {Transform::frac_exponential(1.0, 0.5), -20.0, 20.0},
        {Transform::power_exp_hybrid(1.0, 600.0, 10.0), -600.0, 100.0},
        {Transform::softplus(1.0), 0.0, 20.0},
        {Transform::sinh_shift(1.0, 1.0), -1.0, 20.0},
        {Transform::sigmoid_power(1.0, 1.0), 0.0, 20.0},
    };
    const std::vector<double> thetas = log_grid(1e-3, 10.0, 50);
    Rng rng(derive_seed(options.seed, 11));
    for (const Family& fam : families) {
      std::uniform_real_distribution<double> u(fam.lo, fam.hi);
      std::size_t claimed = 0;
      std::size_t failed = 0;
      double worst = 0.0;
      for (int pair = 0; pair < 100; ++pair) {
        double a = u(rng);
        double b = u(rng);
        // Open lower ends: redraw points sitting exactly on the boundary.
        while (a == fam.lo || b == fam.lo || a == b) {
          a = u(rng);
          b = u(rng);
        }
        if (a < b) std::swap(a, b);
        const RatioCheckReport rep = ratio_monotonicity_check(fam.t, a, b, thetas);
        if (!rep.claimed) continue;
        ++claimed;
        if (!rep.passed) ++failed;
        worst = std::max(worst, rep.worst_violation);
      }
      const std::string name = std::string(Transform::family_name(fam.t.family()));
      add_check(r, name + " ratio monotone", failed == 0 && claimed == 100,
                static_cast<double>(failed), 0.0,
                fmt::format("{} of 100 pairs claimed, worst violation {:.3g}", claimed, worst));
    }
    std::uniform_real_distribution<double> theta_u(1e-3, 10.0);
    std::uniform_real_distribution<double> alpha_u(1e-3, 2.0);
    std::uniform_real_distribution<double> y_u(-20.0, 20.0);
    std::size_t bad = 0;
    double lo = 1.0;
    double hi = 0.0;
    for (int i = 0; i < 100000; ++i) {
      const double g = Transform::sigmoid_power(theta_u(rng), alpha_u(rng)).eval(y_u(rng));
      lo = std::min(lo, g);
      hi = std::max(hi, g);
      if (!(g > 0.0 && g <= 1.0)) ++bad;
    }
    add_check(r, "sigmoid_power bounded in (0, 1]", bad == 0, static_cast<double>(bad), 0.0,
              fmt::format("range [{:.3g}, {:.6g}] over 1e5 points", lo, hi));
  });
}

SuiteReport verify_unbiasedness(const VerifyOptions& options) {
  return timed("unbiasedness", [&](SuiteReport& r) {
    const Objective f = ackley(2);
    Eigen::VectorXd mu(2);
    mu << 0.8, -0.3;
    SmoothingSpec spec = SmoothingSpec::isotropic(
        Kernel::logistic(), Transform::power_exp_hybrid(1.0, 600.0, 10.0), 0.5, f.domain(), 50);
    spec.scaling = Scaling::kRaw;
    spec.log_offset = spec.transform.log_eval(f(mu));
    const std::size_t batches = options.full ? 100000 : 20000;
    const std::size_t fd_draws = options.full ? 2000000 : 400000;

    Rng rng(derive_seed(options.seed, 21));
    Welford plain(2);
    Welford loo(2);
    for (std::size_t b = 0; b < batches; ++b) {
      std::vector<GradientSample> batch = draw_batch(spec, f, mu, rng);
      const GradientDiagnostics diag = scale_batch(spec, batch);
      plain.add(plain_estimate(batch, diag).gradient);
      loo.add(loo_estimate(batch, diag, spec.effective_ridge()).gradient);
    }
    for (Eigen::Index i = 0; i < 2; ++i) {
      Rng fd_rng(derive_seed(options.seed, 22 + static_cast<std::uint64_t>(i)));
      const auto [fd, fd_se] =
          crn_difference(spec, f, mu, i, 1e-3 * spec.scales[i], fd_draws, fd_rng);
      for (auto [label, w] : {std::pair{"plain", &plain}, std::pair{"loo", &loo}}) {
        const double se = std::hypot(w->standard_error()[i], fd_se);
        const double gap = std::abs(w->mean[i] - fd);
        add_check(r, fmt::format("{} coordinate {}", label, i), gap <= 4.0 * se, w->mean[i], fd,
                  fmt::format("|gap| = {:.3g} = {:.2f} SE ({} batches)", gap, gap / se, batches));
      }
    }
  });
}

SuiteReport verify_loo(const VerifyOptions& options) {
  return timed("loo", [&](SuiteReport& r) {
    const std::size_t batches = options.full ? 10000 : 2000;
    std::uint64_t stream = 31;
    for (const BenchmarkPreset& p : loo_presets()) {
      const Objective f = benchmark(p.name, 10);
      const Eigen::VectorXd mu = Eigen::VectorXd::Constant(10, p.init);
      SmoothingSpec spec =
          SmoothingSpec::isotropic(Kernel::logistic(), Transform::power_exp_hybrid(p.theta, p.c, 10.0),
                                   p.sigma, f.domain(), 50);
      spec.scaling = Scaling::kRaw;
      spec.log_offset = spec.transform.log_eval(f(mu));
      Rng rng(derive_seed(options.seed, stream++));
      Welford diff(10);
      Welford sq(3);
      Eigen::VectorXd row(3);
      for (std::size_t b = 0; b < batches; ++b) {
        std::vector<GradientSample> batch = draw_batch(spec, f, mu, rng);
        const GradientDiagnostics diag = scale_batch(spec, batch);
        const Eigen::VectorXd gp = plain_estimate(batch, diag).gradient;
        const Eigen::VectorXd gl = loo_estimate(batch, diag, spec.effective_ridge()).gradient;
        diff.add(gl - gp);
        row << gp.squaredNorm(), gl.squaredNorm(), gl.squaredNorm() - gp.squaredNorm();
        sq.add(row);
      }
      const double upper = sq.mean[2] + kZ99 * sq.standard_error()[2];
      add_check(r, p.name + " E|g_loo|^2 < E|g_plain|^2", upper < 0.0, sq.mean[1], sq.mean[0],
                fmt::format("paired difference {:.4g}, 99% upper bound {:.4g}, {} batches",
                            sq.mean[2], upper, batches));
      const Eigen::VectorXd se = diff.standard_error();
      double worst = 0.0;
      for (Eigen::Index i = 0; i < 10; ++i) worst = std::max(worst, std::abs(diff.mean[i]) / se[i]);
      add_check(r, p.name + " loo and plain means agree", worst <= 3.0, worst, 3.0,
                "largest |mean difference| in paired standard errors");
    }
  });
}

SuiteReport verify_second_moment(const VerifyOptions& options) {
  return timed("second_moment", [&](SuiteReport& r) {
    const std::size_t batches = options.full ? 20000 : 2000;
    struct Setting {
      std::string name;
      Objective f;
      Kernel kernel;
      Transform transform;
      Eigen::VectorXd scales;
      Eigen::VectorXd mu;
    };
    Eigen::VectorXd aniso4(4);
    aniso4 << 0.1, 0.2, 0.3, 0.4;
    Eigen::VectorXd aniso3(3);
    aniso3 << 1.0, 2.0, 3.0;
    std::vector<Setting> settings;
    settings.push_back({"ackley d=5 logistic hybrid isotropic", ackley(5), Kernel::logistic(),
                        Transform::power_exp_hybrid(1.0, 600.0, 10.0),
                        Eigen::VectorXd::Constant(5, 0.5), Eigen::VectorXd::Constant(5, 0.5)});
    settings.push_back({"rosenbrock d=4 gaussian exponential anisotropic", rosenbrock(4),
                        Kernel::gaussian(), Transform::exponential(0.05), aniso4,
                        Eigen::VectorXd::Constant(4, 0.5)});
    settings.push_back({"griewank d=3 student_t(3) sigmoid_power anisotropic", griewank(3),
                        Kernel::student_t(3.0), Transform::sigmoid_power(2.0, 1.0), aniso3,
                        Eigen::VectorXd::Constant(3, 2.0)});
    std::uint64_t stream = 41;
    for (const Setting& s : settings) {
      SmoothingSpec spec;
      spec.kernel = s.kernel;
      spec.transform = s.transform;
      spec.scales = s.scales;
      spec.batch = 10;
      spec.domain = s.f.domain();
      spec.log_offset = s.transform.log_eval(*s.f.optimum());
      Rng rng(derive_seed(options.seed, stream++));
      const SecondMomentProbe probe =
          second_moment_probe(spec, s.f, s.mu, batches, Estimator::kPlain, rng, 1.0);
      add_check(r, s.name, probe.within_bound.value_or(false), probe.mean_sq_norm, *probe.bound,
                fmt::format("mean {:.4g} +- {:.2g} vs g*^2 I S2 = {:.4g}", probe.mean_sq_norm,
                            probe.standard_error, *probe.bound));
    }
  });
}

SuiteReport verify_lipschitz(const VerifyOptions&) {
  return timed("lipschitz", [&](SuiteReport& r) {
    struct Setting {
      Kernel kernel;
      Transform transform;
      double sigma;
    };
    const std::vector<Setting> settings{
        {Kernel::gaussian(), Transform::exponential(3.0), 1.0},
        {Kernel::logistic(), Transform::power(2.0, 1.0), 0.5},
        {Kernel::student_t(3.0), Transform::sigmoid_power(2.0, 3.0), 2.0},
    };
    const Objective f = landscape_objective();
    for (const Setting& s : settings) {
      const KernelConstants k = compute_constants(s.kernel);
      const double bound = std::max(k.curvature, k.fisher_information) / (s.sigma * s.sigma);
      const Smoothed1D g(f, s.kernel, s.transform, s.sigma, landscape_breakpoints());
      double worst = 0.0;
      for (int i = 0; i <= 200; ++i) {
        const double mu = -15.0 + 30.0 * i / 200.0;
        worst = std::max(worst, std::abs(g.at(mu).d2));
      }
      add_check(r,
                fmt::format("{} {} sigma={}", s.kernel.name(), s.transform.name(), s.sigma),
                worst <= bound * (1.0 + 1e-9), worst, bound,
                "max |G''| over 201 points vs g* max(K, I) / sigma^2 (g* = 1 after scaling)");
    }
  });
}

SuiteReport verify_bounds(const VerifyOptions& options) {
  SuiteReport a = verify_second_moment(options);
  SuiteReport b = verify_lipschitz(options);
  a.suite = "bounds";
  a.checks.insert(a.checks.end(), b.checks.begin(), b.checks.end());
  a.seconds += b.seconds;
  return a;
}

const std::vector<LocalizationThreshold>& localization_thresholds() {
  static const std::vector<LocalizationThreshold> thresholds{
      {2.0, 20.0}, {2.5, 20.0}, {3.0, 20.0}, {3.5, 20.0}};
  return thresholds;
}

const std::vector<double>& localization_theta_grid() {
  static const std::vector<double> grid{1.0, 3.0, 5.0, 8.0, 10.0, 15.0, 20.0, 25.0, 30.0, 40.0};
  return grid;
}

SuiteReport verify_localization(const VerifyOptions&) {
  return timed("localization", [&](SuiteReport& r) {
    const Objective f = landscape_objective();
    const double x_star = (*f.maximizer())[0];
    for (const LocalizationThreshold& th : localization_thresholds()) {
      std::size_t zeros_low = 0;
      bool ok = true;
      std::string detail;
      for (double theta : localization_theta_grid()) {
        const Smoothed1D g(f, Kernel::logistic(), Transform::exponential(theta), th.sigma,
                           landscape_breakpoints());
        const std::vector<double> zeros =
            g.stationary_points(x_star - kLocalizationWindow, x_star + kLocalizationWindow, 241);
        if (theta == localization_theta_grid().front()) zeros_low = zeros.size();
        if (theta < th.theta) continue;
        const bool localized =
            !zeros.empty() && std::all_of(zeros.begin(), zeros.end(), [&](double z) {
              return std::abs(z - x_star) <= kLocalizationDelta;
            });
        if (!localized) {
          ok = false;
          detail += fmt::format(" theta={}: {} zeros", theta, zeros.size());
        }
      }
      add_check(r, fmt::format("sigma={} localized for theta >= {}", th.sigma, th.theta), ok,
                th.theta, th.theta, detail.empty() ? "all zeros within 0.25 of x*" : detail);
      add_check(r, fmt::format("sigma={} multiple zeros at theta={}", th.sigma,
                               localization_theta_grid().front()),
                zeros_low >= 2, static_cast<double>(zeros_low), 2.0);
    }
  });
}

std::vector<std::string> suite_names() {
  return {"constants", "transforms", "unbiasedness", "loo", "bounds", "localization"};
}

SuiteReport run_suite(const std::string& name, const VerifyOptions& options) {
  if (name == "constants") return verify_constants(reference_expectations());
  if (name == "transforms") return verify_transforms(options);
  if (name == "unbiasedness") return verify_unbiasedness(options);
  if (name == "loo") return verify_loo(options);
  if (name == "bounds") return verify_bounds(options);
  if (name == "localization") return verify_localization(options);
  throw ParameterError(fmt::format("unknown suite '{}'", name));
}

}  // namespace promot
