#include "promot/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <mutex>
#include <thread>

#include <fmt/format.h>
#include <json.hpp>
#include <unistd.h>

#include "promot/error.hpp"
#include "promot/landscape.hpp"
#include "promot/rng.hpp"

namespace promot {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  return fmt::format("{}", v);  // shortest representation that round-trips
}

// Runs job(i) for i in [0, n) on up to `jobs` threads.
template <typename Job>
void parallel_for(std::size_t n, std::size_t jobs, Job job) {
  const std::size_t workers = std::max<std::size_t>(1, std::min(jobs, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          job(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

RunResult execute(const MethodConfig& config, const Objective& f, const InitSpec& init,
                  std::size_t iterations, std::uint64_t seed, Trajectory* keep) {
  const auto start = std::chrono::steady_clock::now();
  RunResult result;
  try {
    const Eigen::VectorXd mu0 = initial_point(init, f.dimension(), seed);
    Trajectory traj = run_method(config, f, mu0, iterations, seed);
    result = compute_metrics(traj, f.maximizer());
    if (keep) *keep = std::move(traj);
  } catch (const RunAborted& e) {
    result.aborted = true;
    result.reason = e.what();
    result.mse = kNaN;
    result.best_value = kNaN;
  } catch (const OverflowError& e) {
    result.aborted = true;
    result.reason = e.what();
    result.mse = kNaN;
    result.best_value = kNaN;
  } catch (const DomainError& e) {
    result.aborted = true;
    result.reason = e.what();
    result.mse = kNaN;
    result.best_value = kNaN;
  }
  result.seed = seed;
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        current += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        current += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(current));
      current.clear();
    } else {
      current += c;
    }
  }
  fields.push_back(std::move(current));
  return fields;
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

double parse_double(const std::string& s) {
  if (s == "nan") return kNaN;
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw Error(fmt::format("bad number '{}' in runs CSV", s));
  return v;
}

}  // namespace

SmoothingSpec MethodConfig::smoothing_spec(const Box& domain) const {
  if (method == Method::kEpgs) {
    return epgs_config(transform.theta(), sigma, eta0.value_or(0.0), domain, batch).first;
  }
  SmoothingSpec spec = SmoothingSpec::isotropic(kernel, transform, sigma, domain, batch);
  spec.ridge = ridge;
  return spec;
}

ScheduleSpec MethodConfig::schedule_spec() const {
  ScheduleSpec s;
  s.kind = schedule;
  s.gamma = schedule_gamma;
  s.eta0 = eta0;
  s.table = schedule_table;
  return s;
}

BaselineSpec MethodConfig::baseline_spec() const {
  BaselineSpec b;
  b.method = method;
  b.eta0 = eta0.value_or(0.0);
  b.sigma0 = sigma;
  b.gamma_dec = gamma_dec;
  b.alpha = alpha;
  b.beta1 = beta1;
  b.beta2 = beta2;
  b.batch = batch;
  return b;
}

void MethodConfig::validate() const {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ParameterError("sigma must be positive");
  if (batch < 1) throw ParameterError("batch must be at least 1");
  if (uses_smoothing_driver(method)) {
    if (method == Method::kPromotLoo && batch < 2) {
      throw ParameterError("promot_loo requires batch >= 2");
    }
    if (ridge && !(*ridge > 0.0)) throw ParameterError("ridge must be positive");
    SmoothingSpec spec = smoothing_spec(Box::unbounded(1));
    spec.validate();
    schedule_spec().validate(spec);
  } else {
    if (!eta0) throw ParameterError(fmt::format("{} requires eta0", method_name(method)));
    baseline_spec().validate();
  }
}

std::string MethodConfig::describe() const {
  std::string out = fmt::format("eta0={} sigma={}", eta0 ? num(*eta0) : "derived", num(sigma));
  switch (method) {
    case Method::kPromot:
    case Method::kPromotLoo:
    case Method::kEpgs:
      out += fmt::format(" theta={}", num(transform.theta()));
      break;
    case Method::kRsgf:
    case Method::kZoSlghr:
      out += fmt::format(" gamma={}", num(gamma_dec));
      break;
    case Method::kZoSlghd:
      out += fmt::format(" gamma={} alpha={}", num(gamma_dec), num(alpha));
      break;
    case Method::kZoAdamm:
      out += fmt::format(" beta1={} beta2={}", num(beta1), num(beta2));
      break;
    case Method::kZoSgd:
      break;
  }
  return out;
}

Eigen::VectorXd initial_point(const InitSpec& init, Eigen::Index d, std::uint64_t seed) {
  if (!(init.stddev >= 0.0)) throw ParameterError("init stddev must be nonnegative");
  Rng rng(derive_seed(seed, kStreamInit));
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd mu(d);
  for (Eigen::Index i = 0; i < d; ++i) mu[i] = init.mean + init.stddev * normal(rng);
  return mu;
}

Trajectory run_method(const MethodConfig& config, const Objective& f, const Eigen::VectorXd& mu0,
                      std::size_t iterations, std::uint64_t seed) {
  config.validate();
  if (uses_smoothing_driver(config.method)) {
    const Estimator estimator =
        config.method == Method::kPromotLoo ? Estimator::kLoo : Estimator::kPlain;
    return run(config.smoothing_spec(f.domain()), f, mu0, config.schedule_spec(), iterations,
               estimator, seed);
  }
  return run_baseline(config.baseline_spec(), f, mu0, iterations, seed);
}

RunResult compute_metrics(const Trajectory& traj, const std::optional<Eigen::VectorXd>& x_star) {
  if (traj.mu.empty() || traj.mu.size() != traj.f_mu.size()) {
    throw ParameterError("trajectory is empty or inconsistent");
  }
  RunResult r;
  r.seed = traj.seed;
  r.evaluations = traj.total_evaluations();
  if (x_star) {
    const double d = static_cast<double>(x_star->size());
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < traj.mu.size(); ++t) {
      const double e = (traj.mu[t] - *x_star).squaredNorm() / d;
      if (e < best) {
        best = e;
        r.hitting_time = t;
      }
    }
    r.mse = best;
  } else {
    r.mse = kNaN;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < traj.f_mu.size(); ++t) {
      if (traj.f_mu[t] > best) {
        best = traj.f_mu[t];
        r.hitting_time = t;
      }
    }
  }
  r.best_value = traj.f_mu[r.hitting_time];
  return r;
}

Summary summarize(const std::vector<double>& values) {
  Summary s;
  if (values.empty()) return Summary{kNaN, kNaN};
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(ss / static_cast<double>(values.size()));
  return s;
}

std::string format_summary(const Summary& s, int decimals) {
  return fmt::format("{:.{}f}({:.{}f})", s.mean, decimals, s.stddev, decimals);
}

Objective make_objective(const ExperimentSpec& spec) {
  return benchmark(spec.objective, spec.dimension);
}

void aggregate(ProtocolResult& result) {
  std::vector<double> mse;
  std::vector<double> hit;
  std::vector<double> best;
  result.aborted = 0;
  for (const RunResult& r : result.runs) {
    if (r.aborted) {
      ++result.aborted;
      continue;
    }
    mse.push_back(r.mse);
    hit.push_back(static_cast<double>(r.hitting_time));
    best.push_back(r.best_value);
  }
  // Sorting first makes the floating-point sums independent of seed order.
  for (auto* v : {&mse, &hit, &best}) std::sort(v->begin(), v->end());
  result.mse = summarize(mse);
  result.hitting_time = summarize(hit);
  result.best_value = summarize(best);
}

ProtocolResult run_protocol(const ExperimentSpec& spec, std::size_t jobs, bool keep_trajectories) {
  if (spec.seeds.empty()) throw ParameterError("protocol needs at least one seed");
  spec.method.validate();
  const Objective f = make_objective(spec);
  ProtocolResult result;
  result.label = std::string(method_label(spec.method.method));
  result.runs.resize(spec.seeds.size());
  if (keep_trajectories) result.trajectories.resize(spec.seeds.size());
  parallel_for(spec.seeds.size(), jobs, [&](std::size_t i) {
    result.runs[i] = execute(spec.method, f, spec.init, spec.iterations, spec.seeds[i],
                             keep_trajectories ? &result.trajectories[i] : nullptr);
  });
  aggregate(result);
  return result;
}

std::vector<MethodConfig> SweepGrid::expand(const MethodConfig& base) const {
  std::vector<MethodConfig> out{base};
  auto axis = [&out](const std::vector<double>& values, auto apply) {
    if (values.empty()) return;
    std::vector<MethodConfig> next;
    for (const MethodConfig& c : out) {
      for (double v : values) {
        MethodConfig copy = c;
        apply(copy, v);
        next.push_back(std::move(copy));
      }
    }
    out = std::move(next);
  };
  axis(eta0, [](MethodConfig& c, double v) { c.eta0 = v; });
  axis(sigma, [](MethodConfig& c, double v) { c.sigma = v; });
  axis(theta, [](MethodConfig& c, double v) { c.transform = c.transform.with_theta(v); });
  axis(gamma_dec, [](MethodConfig& c, double v) { c.gamma_dec = v; });
  axis(alpha, [](MethodConfig& c, double v) { c.alpha = v; });
  axis(beta1, [](MethodConfig& c, double v) { c.beta1 = v; });
  axis(beta2, [](MethodConfig& c, double v) { c.beta2 = v; });
  return out;
}

SweepResult sweep(const ExperimentSpec& base, const SweepGrid& grid, std::size_t jobs) {
  if (base.seeds.empty()) throw ParameterError("sweep needs at least one seed");
  const std::vector<MethodConfig> configs = grid.expand(base.method);
  for (const MethodConfig& c : configs) c.validate();
  const Objective f = make_objective(base);
  const std::size_t n_seeds = base.seeds.size();
  std::vector<ProtocolResult> results(configs.size());
  for (std::size_t c = 0; c < configs.size(); ++c) {
    results[c].label = fmt::format("{} {}", method_label(configs[c].method), configs[c].describe());
    results[c].runs.resize(n_seeds);
  }
  parallel_for(configs.size() * n_seeds, jobs, [&](std::size_t job) {
    const std::size_t c = job / n_seeds;
    const std::size_t s = job % n_seeds;
    results[c].runs[s] =
        execute(configs[c], f, base.init, base.iterations, base.seeds[s], nullptr);
  });
  for (ProtocolResult& r : results) aggregate(r);

  std::vector<std::size_t> order(configs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const bool aa = results[a].aborted > 0;
    const bool ab = results[b].aborted > 0;
    if (aa != ab) return ab;
    if (aa) return false;
    return results[a].mse.mean < results[b].mse.mean;
  });
  SweepResult out;
  for (std::size_t i : order) {
    out.configs.push_back(configs[i]);
    out.results.push_back(std::move(results[i]));
  }
  out.selected = 0;
  return out;
}

void atomic_write(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += fmt::format(".tmp.{}", static_cast<long>(::getpid()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(fmt::format("cannot write {}", tmp.string()));
    out << content;
    out.flush();
    if (!out) throw Error(fmt::format("write to {} failed", tmp.string()));
  }
  std::filesystem::rename(tmp, path);
}

std::string trajectory_csv(const Trajectory& traj, bool include_mu) {
  std::string out = "step,eta";
  const Eigen::Index d = traj.mu.empty() ? 0 : traj.mu.front().size();
  if (include_mu) {
    for (Eigen::Index i = 0; i < d; ++i) out += fmt::format(",mu_{}", i);
  }
  out += ",f_mu,grad_norm,sigma,evals\n";
  for (std::size_t t = 0; t < traj.mu.size(); ++t) {
    const bool has_step = t < traj.eta.size();
    out += fmt::format("{},{}", t, has_step ? num(traj.eta[t]) : "");
    if (include_mu) {
      for (Eigen::Index i = 0; i < d; ++i) out += "," + num(traj.mu[t][i]);
    }
    out += fmt::format(",{},{},{},{}\n", num(traj.f_mu[t]), has_step ? num(traj.grad_norm[t]) : "",
                       num(traj.sigma[t]), traj.evaluations[t]);
  }
  return out;
}

std::string runs_csv(const std::vector<ProtocolResult>& results) {
  std::string out =
      "schema_version,label,seed,mse,hitting_time,best_value,evaluations,wall_seconds,aborted,"
      "reason\n";
  for (const ProtocolResult& p : results) {
    for (const RunResult& r : p.runs) {
      out += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", kSchemaVersion, quote(p.label), r.seed,
                         num(r.mse), r.hitting_time, num(r.best_value), r.evaluations,
                         num(r.wall_seconds), r.aborted ? 1 : 0, quote(r.reason));
    }
  }
  return out;
}

std::vector<ProtocolResult> parse_runs_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("schema_version,", 0) != 0) {
    throw Error("runs CSV is missing its header");
  }
  std::vector<ProtocolResult> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> f = split_csv_line(line);
    if (f.size() != 10) throw Error(fmt::format("runs CSV row has {} fields", f.size()));
    if (std::stoi(f[0]) != kSchemaVersion) {
      throw Error(fmt::format("unsupported runs CSV schema {}", f[0]));
    }
    RunResult r;
    r.seed = std::stoull(f[2]);
    r.mse = parse_double(f[3]);
    r.hitting_time = std::stoull(f[4]);
    r.best_value = parse_double(f[5]);
    r.evaluations = std::stoull(f[6]);
    r.wall_seconds = parse_double(f[7]);
    r.aborted = f[8] == "1";
    r.reason = f[9];
    auto it = std::find_if(out.begin(), out.end(),
                           [&](const ProtocolResult& p) { return p.label == f[1]; });
    if (it == out.end()) {
      out.emplace_back();
      out.back().label = f[1];
      it = out.end() - 1;
    }
    it->runs.push_back(std::move(r));
  }
  for (ProtocolResult& p : out) aggregate(p);
  return out;
}

std::string summary_json(const std::vector<ProtocolResult>& results,
                         const std::map<std::string, std::string>& meta) {
  using nlohmann::ordered_json;
  auto value = [](double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); };
  ordered_json root;
  root["schema_version"] = kSchemaVersion;
  for (const auto& [k, v] : meta) root["meta"][k] = v;
  root["results"] = ordered_json::array();
  for (const ProtocolResult& p : results) {
    ordered_json entry;
    entry["label"] = p.label;
    entry["mse"] = {{"mean", value(p.mse.mean)}, {"std", value(p.mse.stddev)}};
    entry["hitting_time"] = {{"mean", value(p.hitting_time.mean)},
                             {"std", value(p.hitting_time.stddev)}};
    entry["best_value"] = {{"mean", value(p.best_value.mean)},
                           {"std", value(p.best_value.stddev)}};
    entry["table_row"] = {{"mse", format_summary(p.mse)},
                          {"hitting_time", format_summary(p.hitting_time)},
                          {"best_value", format_summary(p.best_value)}};
    entry["aborted"] = p.aborted;
    entry["runs"] = ordered_json::array();
    for (const RunResult& r : p.runs) {
      ordered_json run;
      run["seed"] = r.seed;
      run["mse"] = value(r.mse);
      run["hitting_time"] = r.hitting_time;
      run["best_value"] = value(r.best_value);
      run["evaluations"] = r.evaluations;
      run["aborted"] = r.aborted;
      if (r.aborted) run["reason"] = r.reason;
      entry["runs"].push_back(std::move(run));
    }
    root["results"].push_back(std::move(entry));
  }
  return root.dump(2) + "\n";
}

std::string LandscapeTable::csv() const {
  std::string out = "mu,f";
  for (const std::string& c : columns) out += "," + c;
  out += "\n";
  for (std::size_t i = 0; i < mu.size(); ++i) {
    out += num(mu[i]) + "," + num(f[i]);
    for (const auto& col : values) out += "," + num(col[i]);
    out += "\n";
  }
  return out;
}

LandscapeTable landscape_table(const Kernel& kernel, const Transform& transform,
                               const std::vector<double>& thetas,
                               const std::vector<double>& sigmas, double lo, double hi,
                               std::size_t points) {
  if (points < 2) throw ParameterError("landscape grid needs at least 2 points");
  if (!(lo < hi)) throw ParameterError("landscape grid needs lo < hi");
  if (thetas.empty() || sigmas.empty()) throw ParameterError("theta and sigma lists must be nonempty");
  const Objective f = landscape_objective();
  LandscapeTable table;
  Eigen::VectorXd x(1);
  for (std::size_t i = 0; i < points; ++i) {
    const double m = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
    table.mu.push_back(m);
    x[0] = m;
    table.f.push_back(f.domain().contains(x) ? f(x) : kNaN);
  }
  for (double theta : thetas) {
    for (double sigma : sigmas) {
      const std::string name = fmt::format("G_theta{}_sigma{}", num(theta), num(sigma));
      table.columns.push_back(name);
      std::vector<double> col(points, kNaN);
      try {
        const Smoothed1D g(f, kernel, transform.with_theta(theta), sigma, landscape_breakpoints());
        for (std::size_t i = 0; i < points; ++i) col[i] = g.value(table.mu[i]);
      } catch (const Error&) {
        table.failed.push_back(name);
      }
      table.values.push_back(std::move(col));
    }
  }
  return table;
}

AttackReport run_attacks(const AttackSpec& spec, std::uint64_t seed, std::size_t jobs) {
  if (spec.inputs < 1) throw ParameterError("attack needs at least one input");
  spec.method.validate();
  const SoftmaxClassifier classifier =
      SoftmaxClassifier::synthetic(spec.classes, spec.dimension, spec.classifier_seed);
  AttackReport report;
  report.outcomes.resize(spec.inputs);
  parallel_for(spec.inputs, jobs, [&](std::size_t i) {
    Rng rng(derive_seed(seed, kStreamData + 1 + i));
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd x(spec.dimension);
    for (Eigen::Index j = 0; j < x.size(); ++j) x[j] = normal(rng);
    const AttackProblem problem(classifier, x, spec.kappa, spec.penalty);
    AttackOutcome& out = report.outcomes[i];
    out.input = i;
    out.target = problem.target;
    try {
      const Objective f = problem.objective(spec.radius);
      const Trajectory traj = run_method(spec.method, f, Eigen::VectorXd::Zero(x.size()),
                                         spec.iterations, derive_seed(seed, i));
      for (std::size_t t = 0; t < traj.mu.size(); ++t) {
        if (problem.success(traj.mu[t])) {
          out.success = true;
          out.first_success = t;
          const Eigen::VectorXd& mu = traj.mu[t];
          const double spread = (x.array() - x.mean()).square().sum();
          out.r_squared = 1.0 - mu.squaredNorm() / spread;
          out.linf = mu.cwiseAbs().maxCoeff();
          break;
        }
      }
    } catch (const RunAborted& e) {
      out.aborted = true;
      out.reason = e.what();
    }
  });
  std::vector<double> r2;
  std::vector<double> linf;
  std::size_t wins = 0;
  for (const AttackOutcome& o : report.outcomes) {
    if (!o.success) continue;
    ++wins;
    r2.push_back(o.r_squared);
    linf.push_back(o.linf);
  }
  report.success_rate = static_cast<double>(wins) / static_cast<double>(spec.inputs);
  report.r_squared = summarize(r2);
  report.linf = summarize(linf);
  return report;
}

}  // namespace promot
