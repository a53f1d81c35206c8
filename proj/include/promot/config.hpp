#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "promot/harness.hpp"

namespace promot {

/// A parsed experiment file.
///
///   description = "..."
///   objective = { name = "ackley", dimension = 50 }
///   init = { mean = 5.0, stddev = 0.01 }
///   method = { id = "promot_loo", eta0 = 0.5, sigma = 0.1 }
///   kernel = { name = "logistic" }
///   transform = { family = "power_exp_hybrid", theta = 1.0, c = 600.0, beta = 10.0 }
///   schedule = { kind = "constant" }
///   batch = 50
///   iterations = 400
///   seeds = 10              # or an explicit list
///   output_dir = "results/ackley"
///   [sweep]                 # optional candidate lists
///   eta0 = [0.1, 0.5]
///   [attack]                # optional, used by the attack command
///   classes = 4
///
/// Unknown keys are rejected with ConfigError naming the field path.
struct ExperimentConfig {
  std::string description;
  ExperimentSpec experiment;
  std::optional<SweepGrid> grid;
  std::optional<AttackSpec> attack;
  std::filesystem::path output_dir;
  bool write_mu = false;
};

ExperimentConfig parse_config(const std::string& text, const std::string& source = "<string>");
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace promot
