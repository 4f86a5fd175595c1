#include "ddpglab/env.hpp"

#include <algorithm>
#include <stdexcept>

namespace ddpglab {

Episode reset(const EnvSpec& spec) {
  if (spec.max_episode_length < 1) throw std::invalid_argument("max_episode_length must be >= 1");
  return Episode{};
}

Transition step(const EnvSpec& spec, double s, double a) {
  if (!(s >= kStateMin && s <= kStateMax)) throw std::invalid_argument("state outside [0, 1]");
  if (!(a >= -kActionLimit && a <= kActionLimit)) {
    throw std::invalid_argument("action outside [-0.1, 0.1]");
  }
  Transition tr;
  tr.s = s;
  tr.a = a;
  const double moved = s + a;
  tr.s_next = std::min(kStateMax, std::max(kStateMin, moved));
  if (spec.kind == EnvKind::one_d_toy && moved < 0.0) {
    tr.r = 1.0;
    tr.terminal = 1.0;
  }
  return tr;
}

StepOutcome advance(const EnvSpec& spec, Episode& episode, double a) {
  StepOutcome out;
  out.transition = step(spec, episode.s, a);
  episode.s = out.transition.s_next;
  episode.steps += 1;
  out.episode_over = out.transition.terminal > 0.0 || episode.steps >= spec.max_episode_length;
  return out;
}

Transition drift_sample(Rng& rng) {
  const double s = rng.uniform01();
  const double a = rng.uniform(-kActionLimit, kActionLimit);
  return step(EnvSpec{EnvKind::drift, 50}, s, a);
}

}  // namespace ddpglab
