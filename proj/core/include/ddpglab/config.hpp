#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ddpglab/agent.hpp"
#include "ddpglab/env.hpp"
#include "ddpglab/noise.hpp"

namespace ddpglab {

/// Everything that determines a run. Serialized as a flat JSON object; see
/// `to_json` for the key names.
struct RunConfig {
  EnvSpec env;
  AgentConfig agent;
  NoiseSpec noise;
  int actor_updates_per_step = 1;
  int critic_updates_per_step = 1;
  std::int64_t total_steps = 100'000;
  std::int64_t success_check_interval = 1000;
  int success_window = 20;
  std::optional<std::int64_t> substitute_optimal_at;
  std::uint64_t seed = 0;
  // Every this many steps the run records max|Q| and max|pi| on the probe
  // grid; 0 disables the trace for training runs.
  std::int64_t trace_interval = 0;
  std::vector<std::int64_t> snapshot_steps;

  void validate() const;
  bool operator==(const RunConfig&) const;
};

/// Defaults for the reward-free drift experiment: 5000 steps, trace every 10.
RunConfig drift_defaults();

std::string_view to_string(EnvKind kind);
std::string_view to_string(NoiseKind kind);
std::string_view to_string(ActorUpdateRule rule);
std::string_view to_string(Activation act);
std::string_view to_string(LossReduction r);

nlohmann::json to_json(const RunConfig& config);

/// Parses a flat config object. Missing keys keep their defaults; unknown
/// keys or ill-typed values throw std::invalid_argument.
RunConfig config_from_json(const nlohmann::json& j, RunConfig base = {});

/// Applies a single `key=value` override. The value is parsed as JSON when
/// possible and as a bare string otherwise.
void apply_override(RunConfig& config, std::string_view assignment);

/// All keys accepted in a config object.
const std::vector<std::string>& config_keys();

}  // namespace ddpglab
