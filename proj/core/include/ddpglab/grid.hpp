#pragma once

#include <cmath>
#include <cstddef>

#include <Eigen/Dense>

namespace ddpglab {

/// Uniform grid over S x A = [0, 1] x [-0.1, 0.1]. Points are computed with a
/// single division so decimal grid values are correctly rounded doubles:
/// with 101 states, state(30) is the double nearest to 0.3.
struct StateActionGrid {
  int n_states = 101;
  int n_actions = 41;

  double state(int i) const {
    return static_cast<double>(i) / static_cast<double>(n_states - 1);
  }
  double action(int j) const {
    const int half = n_actions - 1;
    return static_cast<double>(2 * j - half) / static_cast<double>(10 * half);
  }
  std::size_t size() const {
    return static_cast<std::size_t>(n_states) * static_cast<std::size_t>(n_actions);
  }
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(n_actions) +
           static_cast<std::size_t>(j);
  }
  int nearest_state(double s) const {
    const long k = std::lround(s * (n_states - 1));
    return static_cast<int>(k < 0 ? 0 : (k >= n_states ? n_states - 1 : k));
  }
  int nearest_action(double a) const {
    const long k = std::lround((a * 10.0 + 1.0) * 0.5 * (n_actions - 1));
    return static_cast<int>(k < 0 ? 0 : (k >= n_actions ? n_actions - 1 : k));
  }
  Eigen::RowVectorXd states() const {
    Eigen::RowVectorXd s(n_states);
    for (int i = 0; i < n_states; ++i) s[i] = state(i);
    return s;
  }
};

using ProbeGrid = StateActionGrid;

}  // namespace ddpglab
