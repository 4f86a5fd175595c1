#pragma once

#include <random>

#include "ddpglab/rng.hpp"

namespace ddpglab {

enum class NoiseKind { none, probabilistic, ou };

struct NoiseSpec {
  NoiseKind kind = NoiseKind::probabilistic;
  double p = 0.1;  // replacement probability for probabilistic noise
  double ou_theta = 0.15;
  double ou_sigma = 0.02;  // 0.2 scaled to the 0.1 action range
  double ou_dt = 1.0;
};

/// Per-episode exploration state. `reset_episode()` zeroes the OU process.
struct NoiseState {
  double ou = 0.0;
  bool last_replaced = false;
  std::normal_distribution<double> normal{0.0, 1.0};

  void reset_episode() {
    ou = 0.0;
    normal.reset();
  }
};

/// Turns the actor's action into the behaviour action.
///  - none: returned unchanged;
///  - probabilistic: with probability p, replaced by a fresh U[-limit, limit];
///  - ou: OU state advanced, added, and the sum clipped to [-limit, limit].
double apply_noise(const NoiseSpec& spec, NoiseState& state, double actor_action,
                   double limit, Rng& rng);

}  // namespace ddpglab
