#include "ddpglab/noise.hpp"

#include <algorithm>
#include <cmath>

namespace ddpglab {

double apply_noise(const NoiseSpec& spec, NoiseState& state, double actor_action,
                   double limit, Rng& rng) {
  state.last_replaced = false;
  switch (spec.kind) {
    case NoiseKind::none:
      return actor_action;
    case NoiseKind::probabilistic:
      if (rng.uniform01() < spec.p) {
        state.last_replaced = true;
        return rng.uniform(-limit, limit);
      }
      return actor_action;
    case NoiseKind::ou: {
      const double shock = state.normal(rng);
      state.ou += -spec.ou_theta * spec.ou_dt * state.ou +
                  spec.ou_sigma * std::sqrt(spec.ou_dt) * shock;
      return std::clamp(actor_action + state.ou, -limit, limit);
    }
  }
  return actor_action;
}

}  // namespace ddpglab
