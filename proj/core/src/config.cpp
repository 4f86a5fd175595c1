#include "ddpglab/config.hpp"

#include <algorithm>
#include <functional>
#include <stdexcept>

namespace ddpglab {
namespace {

using nlohmann::json;

template <typename Enum>
struct EnumName {
  Enum value;
  std::string_view name;
};

constexpr EnumName<EnvKind> kEnvKinds[] = {{EnvKind::one_d_toy, "one_d_toy"},
                                           {EnvKind::drift, "drift"}};
constexpr EnumName<NoiseKind> kNoiseKinds[] = {{NoiseKind::none, "none"},
                                               {NoiseKind::probabilistic, "probabilistic"},
                                               {NoiseKind::ou, "ou"}};
constexpr EnumName<ActorUpdateRule> kRules[] = {{ActorUpdateRule::dpg, "ddpg"},
                                                {ActorUpdateRule::argmax, "ddpg-argmax"},
                                                {ActorUpdateRule::regression, "regression"}};
constexpr EnumName<Activation> kActivations[] = {{Activation::relu, "relu"},
                                                 {Activation::tanh, "tanh"}};
constexpr EnumName<LossReduction> kReductions[] = {{LossReduction::mean, "mean"},
                                                   {LossReduction::sum, "sum"}};

template <typename Enum, std::size_t N>
std::string_view name_of(const EnumName<Enum> (&table)[N], Enum v) {
  for (const auto& e : table) {
    if (e.value == v) return e.name;
  }
  return "?";
}

template <typename Enum, std::size_t N>
Enum parse_enum(const EnumName<Enum> (&table)[N], const json& j, std::string_view key) {
  if (!j.is_string()) throw std::invalid_argument(std::string(key) + ": expected a string");
  const auto s = j.get<std::string>();
  for (const auto& e : table) {
    if (e.name == s) return e.value;
  }
  std::string allowed;
  for (const auto& e : table) allowed += (allowed.empty() ? "" : "|") + std::string(e.name);
  throw std::invalid_argument(std::string(key) + ": '" + s + "' is not one of " + allowed);
}

double as_real(const json& j, std::string_view key) {
  if (!j.is_number()) throw std::invalid_argument(std::string(key) + ": expected a number");
  return j.get<double>();
}

std::int64_t as_int(const json& j, std::string_view key) {
  if (!j.is_number_integer()) throw std::invalid_argument(std::string(key) + ": expected an integer");
  return j.get<std::int64_t>();
}

struct Field {
  std::string name;
  std::function<json(const RunConfig&)> get;
  std::function<void(RunConfig&, const json&)> set;
};

#define DDPGLAB_REAL(key, member)                                                  \
  Field{key, [](const RunConfig& c) { return json(c.member); },                    \
        [](RunConfig& c, const json& j) { c.member = as_real(j, key); }}
#define DDPGLAB_INT(key, member, type)                                             \
  Field{key, [](const RunConfig& c) { return json(c.member); },                    \
        [](RunConfig& c, const json& j) { c.member = static_cast<type>(as_int(j, key)); }}
#define DDPGLAB_ENUM(key, member, table)                                           \
  Field{key, [](const RunConfig& c) { return json(std::string(name_of(table, c.member))); }, \
        [](RunConfig& c, const json& j) { c.member = parse_enum(table, j, key); }}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      DDPGLAB_ENUM("env_kind", env.kind, kEnvKinds),
      DDPGLAB_INT("max_episode_length", env.max_episode_length, int),
      Field{"hidden_layers", [](const RunConfig& c) { return json(c.agent.hidden_layers); },
            [](RunConfig& c, const json& j) {
              if (!j.is_array()) throw std::invalid_argument("hidden_layers: expected an array");
              std::vector<int> sizes;
              for (const auto& e : j) sizes.push_back(static_cast<int>(as_int(e, "hidden_layers")));
              c.agent.hidden_layers = std::move(sizes);
            }},
      DDPGLAB_ENUM("hidden_activation", agent.hidden_activation, kActivations),
      DDPGLAB_REAL("gamma", agent.gamma),
      DDPGLAB_REAL("polyak", agent.polyak),
      DDPGLAB_REAL("actor_lr", agent.actor_lr),
      DDPGLAB_REAL("critic_lr", agent.critic_lr),
      DDPGLAB_REAL("adam_beta1", agent.adam_beta1),
      DDPGLAB_REAL("adam_beta2", agent.adam_beta2),
      DDPGLAB_REAL("adam_epsilon", agent.adam_epsilon),
      DDPGLAB_ENUM("actor_update", agent.actor_update, kRules),
      DDPGLAB_INT("argmax_candidates", agent.argmax_candidates, int),
      DDPGLAB_INT("batch_size", agent.batch_size, int),
      DDPGLAB_INT("replay_capacity", agent.replay_capacity, std::size_t),
      DDPGLAB_ENUM("loss_reduction", agent.loss_reduction, kReductions),
      DDPGLAB_ENUM("noise", noise.kind, kNoiseKinds),
      DDPGLAB_REAL("noise_p", noise.p),
      DDPGLAB_REAL("ou_theta", noise.ou_theta),
      DDPGLAB_REAL("ou_sigma", noise.ou_sigma),
      DDPGLAB_REAL("ou_dt", noise.ou_dt),
      DDPGLAB_INT("actor_updates_per_step", actor_updates_per_step, int),
      DDPGLAB_INT("critic_updates_per_step", critic_updates_per_step, int),
      DDPGLAB_INT("total_steps", total_steps, std::int64_t),
      DDPGLAB_INT("success_check_interval", success_check_interval, std::int64_t),
      DDPGLAB_INT("success_window", success_window, int),
      Field{"substitute_optimal_at",
            [](const RunConfig& c) {
              return c.substitute_optimal_at ? json(*c.substitute_optimal_at) : json(nullptr);
            },
            [](RunConfig& c, const json& j) {
              if (j.is_null()) {
                c.substitute_optimal_at.reset();
              } else {
                c.substitute_optimal_at = as_int(j, "substitute_optimal_at");
              }
            }},
      Field{"seed", [](const RunConfig& c) { return json(c.seed); },
            [](RunConfig& c, const json& j) {
              if (!j.is_number_integer()) throw std::invalid_argument("seed: expected an integer");
              c.seed = j.get<std::uint64_t>();
            }},
      DDPGLAB_INT("trace_interval", trace_interval, std::int64_t),
      Field{"snapshot_steps", [](const RunConfig& c) { return json(c.snapshot_steps); },
            [](RunConfig& c, const json& j) {
              if (!j.is_array()) throw std::invalid_argument("snapshot_steps: expected an array");
              std::vector<std::int64_t> steps;
              for (const auto& e : j) steps.push_back(as_int(e, "snapshot_steps"));
              c.snapshot_steps = std::move(steps);
            }},
  };
  return table;
}

#undef DDPGLAB_REAL
#undef DDPGLAB_INT
#undef DDPGLAB_ENUM

const Field& find_field(std::string_view key) {
  for (const auto& f : fields()) {
    if (f.name == key) return f;
  }
  throw std::invalid_argument("unknown config key '" + std::string(key) + "'");
}

}  // namespace

std::string_view to_string(EnvKind kind) { return name_of(kEnvKinds, kind); }
std::string_view to_string(NoiseKind kind) { return name_of(kNoiseKinds, kind); }
std::string_view to_string(ActorUpdateRule rule) { return name_of(kRules, rule); }
std::string_view to_string(Activation act) { return name_of(kActivations, act); }
std::string_view to_string(LossReduction r) { return name_of(kReductions, r); }

void RunConfig::validate() const {
  if (env.max_episode_length < 1) throw std::invalid_argument("max_episode_length must be >= 1");
  agent.validate();
  if (!(noise.p >= 0.0 && noise.p <= 1.0)) throw std::invalid_argument("noise_p must lie in [0, 1]");
  if (!(noise.ou_theta > 0.0 && noise.ou_sigma >= 0.0 && noise.ou_dt > 0.0)) {
    throw std::invalid_argument("OU parameters must be positive");
  }
  if (actor_updates_per_step < 0 || critic_updates_per_step < 0) {
    throw std::invalid_argument("update counts must be non-negative");
  }
  if (total_steps < 1) throw std::invalid_argument("total_steps must be >= 1");
  if (success_check_interval < 1) throw std::invalid_argument("success_check_interval must be >= 1");
  if (success_window < 1) throw std::invalid_argument("success_window must be >= 1");
  if (substitute_optimal_at && *substitute_optimal_at < 0) {
    throw std::invalid_argument("substitute_optimal_at must be >= 0");
  }
  if (trace_interval < 0) throw std::invalid_argument("trace_interval must be >= 0");
}

bool RunConfig::operator==(const RunConfig& other) const {
  return to_json(*this) == to_json(other);
}

RunConfig drift_defaults() {
  RunConfig c;
  c.env.kind = EnvKind::drift;
  c.noise.kind = NoiseKind::none;
  c.total_steps = 5000;
  c.trace_interval = 10;
  return c;
}

nlohmann::json to_json(const RunConfig& config) {
  json j = json::object();
  for (const auto& f : fields()) j[f.name] = f.get(config);
  return j;
}

RunConfig config_from_json(const nlohmann::json& j, RunConfig base) {
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    // The run JSON carries a schema tag alongside the echoed config.
    if (key == "schema_version") continue;
    find_field(key).set(base, value);
  }
  base.validate();
  return base;
}

void apply_override(RunConfig& config, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw std::invalid_argument("override must look like key=value: '" + std::string(assignment) + "'");
  }
  const std::string key(assignment.substr(0, eq));
  const std::string raw(assignment.substr(eq + 1));
  json value = json::parse(raw, nullptr, /*allow_exceptions=*/false);
  if (value.is_discarded()) value = raw;
  find_field(key).set(config, value);
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& f : fields()) k.push_back(f.name);
    return k;
  }();
  return keys;
}

}  // namespace ddpglab
