#include "promot/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <toml.hpp>

#include "promot/error.hpp"

namespace promot {
namespace {

std::string join(const std::string& prefix, std::string_view key) {
  return prefix.empty() ? std::string(key) : prefix + "." + std::string(key);
}

void reject_unknown(const toml::table& table, const std::string& prefix,
                    const std::set<std::string>& allowed) {
  for (const auto& [key, value] : table) {
    if (!allowed.count(std::string(key.str()))) {
      throw ConfigError(join(prefix, key.str()), "unknown key");
    }
  }
}

const toml::table* sub_table(const toml::table& t, std::string_view key, const std::string& prefix,
                             bool required) {
  const toml::node* node = t.get(key);
  if (!node) {
    if (required) throw ConfigError(join(prefix, key), "missing required table");
    return nullptr;
  }
  const toml::table* out = node->as_table();
  if (!out) throw ConfigError(join(prefix, key), "expected a table");
  return out;
}

std::optional<double> get_real(const toml::table& t, std::string_view key, const std::string& prefix) {
  const toml::node* node = t.get(key);
  if (!node) return std::nullopt;
  if (auto v = node->value<double>()) return *v;
  throw ConfigError(join(prefix, key), "expected a number");
}

double require_real(const toml::table& t, std::string_view key, const std::string& prefix) {
  auto v = get_real(t, key, prefix);
  if (!v) throw ConfigError(join(prefix, key), "missing required number");
  return *v;
}

std::optional<std::int64_t> get_int(const toml::table& t, std::string_view key,
                                    const std::string& prefix) {
  const toml::node* node = t.get(key);
  if (!node) return std::nullopt;
  if (auto v = node->as_integer()) return v->get();
  throw ConfigError(join(prefix, key), "expected an integer");
}

std::size_t get_count(const toml::table& t, std::string_view key, const std::string& prefix,
                      std::size_t fallback, std::size_t minimum) {
  auto v = get_int(t, key, prefix);
  if (!v) return fallback;
  if (*v < static_cast<std::int64_t>(minimum)) {
    throw ConfigError(join(prefix, key), fmt::format("must be at least {}", minimum));
  }
  return static_cast<std::size_t>(*v);
}

std::optional<std::string> get_string(const toml::table& t, std::string_view key,
                                      const std::string& prefix) {
  const toml::node* node = t.get(key);
  if (!node) return std::nullopt;
  if (auto v = node->value<std::string>()) return *v;
  throw ConfigError(join(prefix, key), "expected a string");
}

std::vector<double> get_real_list(const toml::table& t, std::string_view key,
                                  const std::string& prefix) {
  const toml::node* node = t.get(key);
  if (!node) return {};
  const toml::array* arr = node->as_array();
  if (!arr) throw ConfigError(join(prefix, key), "expected a list of numbers");
  if (arr->empty()) throw ConfigError(join(prefix, key), "list must not be empty");
  std::vector<double> out;
  for (std::size_t i = 0; i < arr->size(); ++i) {
    auto v = (*arr)[i].value<double>();
    if (!v) throw ConfigError(fmt::format("{}[{}]", join(prefix, key), i), "expected a number");
    out.push_back(*v);
  }
  return out;
}

// Runs `fn` and rethrows library parameter errors against a field path.
template <typename Fn>
auto at_path(const std::string& path, Fn fn) {
  try {
    return fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(path, e.what());
  }
}

Kernel parse_kernel(const toml::table& t) {
  const std::string p = "kernel";
  reject_unknown(t, p, {"name", "nu", "beta"});
  const auto name = get_string(t, "name", p);
  if (!name) throw ConfigError("kernel.name", "missing required string");
  std::optional<double> param = get_real(t, "nu", p);
  if (auto beta = get_real(t, "beta", p)) param = beta;
  return at_path("kernel", [&] { return Kernel::from_name(*name, param); });
}

Transform parse_transform(const toml::table& t) {
  const std::string p = "transform";
  reject_unknown(t, p, {"family", "theta", "c", "beta", "alpha"});
  const auto family = get_string(t, "family", p);
  if (!family) throw ConfigError("transform.family", "missing required string");
  const double theta = require_real(t, "theta", p);
  if (!(theta > 0.0)) throw ConfigError("transform.theta", "must be positive");
  Transform::Params params;
  params.c = get_real(t, "c", p).value_or(0.0);
  params.beta = get_real(t, "beta", p).value_or(0.0);
  params.alpha = get_real(t, "alpha", p).value_or(1.0);
  const TransformFamily fam =
      at_path("transform.family", [&] { return Transform::family_from_name(*family); });
  return at_path("transform", [&] { return Transform(fam, theta, params); });
}

SweepGrid parse_sweep(const toml::table& t) {
  const std::string p = "sweep";
  reject_unknown(t, p, {"eta0", "sigma", "theta", "gamma_dec", "alpha", "beta1", "beta2"});
  SweepGrid g;
  g.eta0 = get_real_list(t, "eta0", p);
  g.sigma = get_real_list(t, "sigma", p);
  g.theta = get_real_list(t, "theta", p);
  g.gamma_dec = get_real_list(t, "gamma_dec", p);
  g.alpha = get_real_list(t, "alpha", p);
  g.beta1 = get_real_list(t, "beta1", p);
  g.beta2 = get_real_list(t, "beta2", p);
  return g;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
  toml::table root;
  try {
    root = toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    const auto& where = e.source().begin;
    throw ConfigError("", fmt::format("{}:{}:{}: {}", source, where.line, where.column,
                                      e.description()));
  }
  reject_unknown(root, "",
                 {"description", "objective", "init", "method", "kernel", "transform", "schedule",
                  "batch", "iterations", "seeds", "output_dir", "write_mu", "sweep", "attack"});

  ExperimentConfig cfg;
  cfg.description = get_string(root, "description", "").value_or("");
  ExperimentSpec& spec = cfg.experiment;

  const bool has_attack = root.contains("attack");
  if (const toml::table* obj = sub_table(root, "objective", "", !has_attack)) {
    reject_unknown(*obj, "objective", {"name", "dimension"});
    const auto name = get_string(*obj, "name", "objective");
    if (!name) throw ConfigError("objective.name", "missing required string");
    if (*name != "ackley" && *name != "rosenbrock" && *name != "griewank") {
      throw ConfigError("objective.name", fmt::format("unknown objective '{}'", *name));
    }
    spec.objective = *name;
    spec.dimension = static_cast<Eigen::Index>(get_count(*obj, "dimension", "objective", 50, 1));
    if (spec.objective == "rosenbrock" && spec.dimension < 2) {
      throw ConfigError("objective.dimension", "rosenbrock needs dimension >= 2");
    }
  }
  if (const toml::table* init = sub_table(root, "init", "", false)) {
    reject_unknown(*init, "init", {"mean", "stddev"});
    spec.init.mean = get_real(*init, "mean", "init").value_or(0.0);
    spec.init.stddev = get_real(*init, "stddev", "init").value_or(0.0);
    if (!(spec.init.stddev >= 0.0)) throw ConfigError("init.stddev", "must be nonnegative");
  }

  MethodConfig& m = spec.method;
  const toml::table* method = sub_table(root, "method", "", true);
  reject_unknown(*method, "method",
                 {"id", "eta0", "sigma", "ridge", "gamma_dec", "alpha", "beta1", "beta2"});
  const auto id = get_string(*method, "id", "method");
  if (!id) throw ConfigError("method.id", "missing required string");
  m.method = at_path("method.id", [&] { return method_from_name(*id); });
  m.eta0 = get_real(*method, "eta0", "method");
  if (auto s = get_real(*method, "sigma", "method")) m.sigma = *s;
  if (!(m.sigma > 0.0)) throw ConfigError("method.sigma", "must be positive");
  if (m.eta0 && !(*m.eta0 >= 0.0)) throw ConfigError("method.eta0", "must be nonnegative");
  m.ridge = get_real(*method, "ridge", "method");
  if (m.ridge && !(*m.ridge > 0.0)) throw ConfigError("method.ridge", "must be positive");
  m.gamma_dec = get_real(*method, "gamma_dec", "method").value_or(1.0);
  if (!(m.gamma_dec > 0.0 && m.gamma_dec <= 1.0)) {
    throw ConfigError("method.gamma_dec", "must lie in (0, 1]");
  }
  m.alpha = get_real(*method, "alpha", "method").value_or(0.1);
  if (!(m.alpha > 0.0)) throw ConfigError("method.alpha", "must be positive");
  m.beta1 = get_real(*method, "beta1", "method").value_or(0.9);
  if (!(m.beta1 > 0.0 && m.beta1 < 1.0)) throw ConfigError("method.beta1", "must lie in (0, 1)");
  m.beta2 = get_real(*method, "beta2", "method").value_or(0.5);
  if (!(m.beta2 > 0.0 && m.beta2 < 1.0)) throw ConfigError("method.beta2", "must lie in (0, 1)");

  if (const toml::table* k = sub_table(root, "kernel", "", false)) {
    m.kernel = parse_kernel(*k);
  } else if (uses_smoothing_driver(m.method) && m.method != Method::kEpgs) {
    throw ConfigError("kernel", "missing required table");
  }
  if (const toml::table* t = sub_table(root, "transform", "", false)) {
    m.transform = parse_transform(*t);
  } else if (uses_smoothing_driver(m.method)) {
    throw ConfigError("transform", "missing required table");
  }
  if (const toml::table* s = sub_table(root, "schedule", "", false)) {
    reject_unknown(*s, "schedule", {"kind", "gamma", "table"});
    if (auto kind = get_string(*s, "kind", "schedule")) {
      m.schedule = at_path("schedule.kind", [&] { return schedule_kind_from_name(*kind); });
    }
    m.schedule_gamma = get_real(*s, "gamma", "schedule").value_or(0.1);
    m.schedule_table = get_real_list(*s, "table", "schedule");
  }

  m.batch = get_count(root, "batch", "", 50, 1);
  spec.iterations = get_count(root, "iterations", "", 400, 1);

  if (const toml::node* seeds = root.get("seeds")) {
    if (auto n = seeds->as_integer()) {
      if (n->get() < 1) throw ConfigError("seeds", "seed count must be at least 1");
      for (std::int64_t i = 0; i < n->get(); ++i) spec.seeds.push_back(static_cast<std::uint64_t>(i));
    } else if (const toml::array* arr = seeds->as_array()) {
      if (arr->empty()) throw ConfigError("seeds", "list must not be empty");
      for (std::size_t i = 0; i < arr->size(); ++i) {
        auto v = (*arr)[i].value<std::int64_t>();
        if (!v || *v < 0) throw ConfigError(fmt::format("seeds[{}]", i), "expected a nonnegative integer");
        spec.seeds.push_back(static_cast<std::uint64_t>(*v));
      }
    } else {
      throw ConfigError("seeds", "expected a count or a list of integers");
    }
  } else {
    spec.seeds = {0};
  }

  if (auto dir = get_string(root, "output_dir", "")) cfg.output_dir = *dir;
  if (const toml::node* w = root.get("write_mu")) {
    auto v = w->value<bool>();
    if (!v) throw ConfigError("write_mu", "expected a boolean");
    cfg.write_mu = *v;
  }
  if (const toml::table* s = sub_table(root, "sweep", "", false)) cfg.grid = parse_sweep(*s);

  if (const toml::table* a = sub_table(root, "attack", "", false)) {
    reject_unknown(*a, "attack",
                   {"classes", "dimension", "classifier_seed", "inputs", "kappa", "penalty", "radius"});
    AttackSpec atk;
    atk.classes = get_count(*a, "classes", "attack", 4, 2);
    atk.dimension = static_cast<Eigen::Index>(get_count(*a, "dimension", "attack", 20, 1));
    atk.classifier_seed = get_count(*a, "classifier_seed", "attack", 7, 0);
    atk.inputs = get_count(*a, "inputs", "attack", 20, 1);
    atk.kappa = get_real(*a, "kappa", "attack").value_or(0.0);
    atk.penalty = get_real(*a, "penalty", "attack").value_or(0.1);
    if (!(atk.penalty >= 0.0)) throw ConfigError("attack.penalty", "must be nonnegative");
    atk.radius = get_real(*a, "radius", "attack").value_or(10.0);
    if (!(atk.radius > 0.0)) throw ConfigError("attack.radius", "must be positive");
    atk.iterations = spec.iterations;
    atk.method = m;
    cfg.attack = atk;
  }

  at_path("method", [&] {
    m.validate();
    return 0;
  });
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", fmt::format("cannot read config file {}", path.string()));
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), path.string());
}

}  // namespace promot
