#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ddpglab/config.hpp"

namespace ddpglab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitUsage = 2;

/// Environment variable naming the default output directory.
inline constexpr const char* kOutEnv = "DDPGLAB_OUT";

/// Where a run's configuration comes from. Precedence, lowest first:
/// base defaults, the config file, the convenience flags, key=value overrides.
struct ConfigSources {
  std::string config_path;
  std::string noise;
  std::string agent;
  std::optional<double> gamma;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;
};

/// Throws std::invalid_argument on unreadable or malformed input.
RunConfig resolve_run_config(const ConfigSources& sources, RunConfig base = {});

/// "a..b" (inclusive), "a,b,c" or a single seed.
std::vector<std::uint64_t> parse_seeds(std::string_view text);

int parse_and_dispatch(int argc, const char* const* argv);
int parse_and_dispatch(const std::vector<std::string>& args, std::ostream& out,
                       std::ostream& err);

}  // namespace ddpglab::cli
