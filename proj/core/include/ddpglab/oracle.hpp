#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ddpglab/grid.hpp"

namespace ddpglab {

using Policy = std::function<double(double)>;

/// Step count used for pairs whose rollout never terminates within the
/// horizon; their value is 0.
inline constexpr int kNeverTerminates = -1;

/// Smallest H with gamma^H < threshold.
int horizon_for(double gamma, double threshold = 1e-12);

/// Exact Q^pi on a grid: values[i * n_actions + j] = gamma^N r for the
/// rollout starting with (state(i), action(j)) and following the policy,
/// where N counts the transitions after the first one.
struct QTable {
  StateActionGrid grid;
  double gamma = 0.99;
  int horizon = 0;
  std::vector<double> values;
  std::vector<int> steps;  // N(s, a), or kNeverTerminates
  double max_snap_distance = 0.0;

  double value(int i, int j) const { return values[grid.index(i, j)]; }
  int n_steps(int i, int j) const { return steps[grid.index(i, j)]; }
};

/// States reached by a rollout are snapped back onto the grid when they are
/// within 1e-9 of a grid state, so grid-aligned dynamics follow exact decimal
/// arithmetic (0.3 - 0.1 - 0.1 - 0.1 lands on 0, not on -2.8e-17). Off-grid
/// states are followed as plain doubles.
double canonical_state(const StateActionGrid& grid, double s);

/// Forward rollout of every grid pair until termination or `horizon` further
/// steps (horizon_for(gamma) when unset).
QTable compute_qpi(const Policy& policy, const StateActionGrid& grid, double gamma,
                   std::optional<int> horizon = std::nullopt);

struct BellmanResidual {
  double max_residual = 0.0;
  int worst_state = 0;
  int worst_action = 0;
  double max_state_snap = 0.0;   // |s' - nearest grid state|
  double max_action_snap = 0.0;  // |pi(s') - nearest grid action|
};

/// max |Q(s,a) - r - gamma (1 - t) Q(s', pi(s'))| with s' and pi(s') snapped
/// to the nearest grid point.
BellmanResidual bellman_residual(const QTable& table, const Policy& policy);

struct PiecewiseReport {
  bool all_members = false;         // every value in {0} U {gamma^n r}
  double max_membership_error = 0.0;
  std::vector<double> distinct_values;
  double flat_fraction = 0.0;       // interior cells with 4 zero neighbour differences
  std::size_t jump_cells = 0;       // interior cells next to a plateau jump
  std::size_t sloped_cells = 0;     // nonzero but sub-gap differences
  double flat_fraction_off_jumps = 0.0;  // flat cells / (interior - jump cells)
};

/// Checks that a table takes values in {0} U {gamma^n r : 0 <= n <= H, r in
/// rewards} (to 1e-12) and measures how flat it is between plateau jumps.
PiecewiseReport check_piecewise_values(const QTable& table, std::span<const double> rewards);

/// Q(s, a) = [s + a < 0].
double indicator_critic(double s, double a);
/// pi(s) = 0.1.
double rightmost_policy(double s);

struct DeadlockReport {
  std::size_t critic_checks = 0;
  std::size_t critic_violations = 0;  // grid pairs with y != Q(s, a)
  double critic_loss = 0.0;           // mean (Q - y)^2 over the grid
  std::size_t actor_checks = 0;
  std::size_t actor_violations = 0;   // states with nonzero dQ/da at pi(s)
  double max_action_gradient = 0.0;

  bool holds() const { return critic_violations == 0 && actor_violations == 0; }
};

/// Evaluates the critic and actor fixed-point conditions for the pair
/// (Q = [s + a < 0], policy) on every 1D-toy transition of the grid. The
/// action gradient is the symmetric difference quotient with step h.
DeadlockReport check_deadlock_fixed_point(const StateActionGrid& grid, double gamma,
                                          const Policy& policy = rightmost_policy,
                                          double h = 1e-3);

struct GapEntry {
  double delta = 0.0;
  bool in_domain = false;  // 0 < delta < r1
  int n = 0;
  double a = 0.0;          // r1 gamma^n
  double b = 0.0;          // r1 gamma^(n+1)
  bool holds = false;      // delta nu < a - b and b < a < delta
  bool holds_large_nu = false;  // same with nu replaced by gamma^2 / (1 - gamma)
};

struct GapReport {
  double gamma = 0.0;
  double nu = 0.0;        // gamma^2 (1 - gamma)
  double large_nu = 0.0;  // gamma^2 / (1 - gamma)
  std::vector<GapEntry> entries;

  bool all_hold() const;
  bool all_hold_large_nu() const;
};

/// Single-reward gap construction: for each delta, n = floor(log_gamma(delta
/// / r1)) + 1 and the consecutive values a = r1 gamma^n, b = r1 gamma^(n+1).
/// n <= log_gamma(delta / r1) + 1 gives a >= gamma delta, hence
/// a - b = a (1 - gamma) > delta gamma^2 (1 - gamma) = delta nu, and
/// n > log_gamma(delta / r1) gives a < delta. The larger constant
/// gamma^2 / (1 - gamma) is evaluated too and reported separately; it does
/// not satisfy the inequality in general.
GapReport check_value_gap(double gamma, std::span<const double> deltas, double r1 = 1.0);

/// `count` log-spaced values strictly inside (lo, hi).
std::vector<double> log_spaced_interior(double lo, double hi, int count);

struct OracleCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// The full battery used by the `oracle` subcommand.
std::vector<OracleCheck> run_oracle_suite(double gamma);

/// s,a,q,n_steps (n_steps is "inf" for never-terminating pairs).
void write_qtable_csv(std::ostream& out, const QTable& table);

}  // namespace ddpglab
