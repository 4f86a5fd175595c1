#pragma once

#include "ddpglab/rng.hpp"

namespace ddpglab {

inline constexpr double kStateMin = 0.0;
inline constexpr double kStateMax = 1.0;
inline constexpr double kActionLimit = 0.1;

enum class EnvKind { one_d_toy, drift };

struct EnvSpec {
  EnvKind kind = EnvKind::one_d_toy;
  int max_episode_length = 50;
};

/// One environment step. `terminal` is 1 only for real termination; a
/// time-limit cut is reported through Episode/StepOutcome, never here.
struct Transition {
  double s = 0.0;
  double a = 0.0;
  double r = 0.0;
  double terminal = 0.0;
  double s_next = 0.0;

  bool operator==(const Transition&) const = default;
};

struct Episode {
  double s = 0.0;
  int steps = 0;
};

struct StepOutcome {
  Transition transition;
  bool episode_over = false;
};

Episode reset(const EnvSpec& spec);

/// Pure dynamics: s' = clip(s + a, 0, 1); on the 1D toy r = t = [s + a < 0].
/// Throws std::invalid_argument for s outside [0, 1] or a outside [-0.1, 0.1].
Transition step(const EnvSpec& spec, double s, double a);

/// Steps an episode in place; the episode is over on termination or when the
/// step counter reaches the length cap.
StepOutcome advance(const EnvSpec& spec, Episode& episode, double a);

/// Reward-free transition with s ~ U[0, 1], a ~ U[-0.1, 0.1].
Transition drift_sample(Rng& rng);

/// The optimal 1D-toy policy: always step left as far as possible.
constexpr double optimal_action(double /*s*/) { return -kActionLimit; }

}  // namespace ddpglab
