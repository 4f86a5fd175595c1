#include "ddpglab/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "ddpglab/agent.hpp"
#include "ddpglab/env.hpp"

namespace ddpglab {
namespace {

constexpr double kSnapTolerance = 1e-9;
constexpr double kValueTolerance = 1e-12;

const EnvSpec kToy{EnvKind::one_d_toy, 50};

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

int horizon_for(double gamma, double threshold) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in (0, 1)");
  int h = static_cast<int>(std::ceil(std::log(threshold) / std::log(gamma)));
  while (std::pow(gamma, h) >= threshold) ++h;
  return h;
}

double canonical_state(const StateActionGrid& grid, double s) {
  const double g = grid.state(grid.nearest_state(s));
  return std::abs(g - s) <= kSnapTolerance ? g : s;
}

QTable compute_qpi(const Policy& policy, const StateActionGrid& grid, double gamma,
                   std::optional<int> horizon) {
  QTable table;
  table.grid = grid;
  table.gamma = gamma;
  table.horizon = horizon ? *horizon : horizon_for(gamma);
  table.values.assign(grid.size(), 0.0);
  table.steps.assign(grid.size(), kNeverTerminates);

  for (int i = 0; i < grid.n_states; ++i) {
    for (int j = 0; j < grid.n_actions; ++j) {
      Transition tr = step(kToy, grid.state(i), grid.action(j));
      int n = 0;
      while (tr.terminal == 0.0 && n < table.horizon) {
        const double s = canonical_state(grid, tr.s_next);
        table.max_snap_distance = std::max(table.max_snap_distance, std::abs(s - tr.s_next));
        tr = step(kToy, s, policy(s));
        ++n;
      }
      if (tr.terminal > 0.0) {
        table.steps[grid.index(i, j)] = n;
        table.values[grid.index(i, j)] = std::pow(gamma, n) * tr.r;
      }
    }
  }
  return table;
}

BellmanResidual bellman_residual(const QTable& table, const Policy& policy) {
  BellmanResidual out;
  const auto& grid = table.grid;
  for (int i = 0; i < grid.n_states; ++i) {
    for (int j = 0; j < grid.n_actions; ++j) {
      const Transition tr = step(kToy, grid.state(i), grid.action(j));
      double bootstrap = 0.0;
      if (tr.terminal == 0.0) {
        const int k = grid.nearest_state(tr.s_next);
        out.max_state_snap = std::max(out.max_state_snap, std::abs(grid.state(k) - tr.s_next));
        const double a_next = policy(grid.state(k));
        const int l = grid.nearest_action(a_next);
        out.max_action_snap = std::max(out.max_action_snap, std::abs(grid.action(l) - a_next));
        bootstrap = table.value(k, l);
      }
      const double residual =
          std::abs(table.value(i, j) - tr.r - table.gamma * (1.0 - tr.terminal) * bootstrap);
      if (residual > out.max_residual) {
        out.max_residual = residual;
        out.worst_state = i;
        out.worst_action = j;
      }
    }
  }
  return out;
}

PiecewiseReport check_piecewise_values(const QTable& table, std::span<const double> rewards) {
  PiecewiseReport rep;
  rep.all_members = true;
  const double log_gamma = std::log(table.gamma);
  for (double v : table.values) {
    double err = std::abs(v);
    for (double r : rewards) {
      if (r == 0.0 || v == 0.0 || (v > 0.0) != (r > 0.0)) continue;
      const double n_real = std::log(v / r) / log_gamma;
      const long n = std::clamp(std::lround(n_real), 0L, static_cast<long>(table.horizon));
      err = std::min(err, std::abs(v - r * std::pow(table.gamma, static_cast<double>(n))));
    }
    rep.max_membership_error = std::max(rep.max_membership_error, err);
    if (err > kValueTolerance) rep.all_members = false;
  }

  std::vector<double> sorted = table.values;
  std::sort(sorted.begin(), sorted.end());
  for (double v : sorted) {
    if (rep.distinct_values.empty() || v - rep.distinct_values.back() > kValueTolerance) {
      rep.distinct_values.push_back(v);
    }
  }
  double min_gap = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < rep.distinct_values.size(); ++k) {
    min_gap = std::min(min_gap, rep.distinct_values[k] - rep.distinct_values[k - 1]);
  }

  const auto& g = table.grid;
  std::size_t interior = 0, flat = 0;
  for (int i = 1; i + 1 < g.n_states; ++i) {
    for (int j = 1; j + 1 < g.n_actions; ++j) {
      ++interior;
      const double c = table.value(i, j);
      const double diffs[4] = {std::abs(table.value(i - 1, j) - c), std::abs(table.value(i + 1, j) - c),
                               std::abs(table.value(i, j - 1) - c), std::abs(table.value(i, j + 1) - c)};
      const double largest = *std::max_element(std::begin(diffs), std::end(diffs));
      if (largest == 0.0) {
        ++flat;
      } else if (largest >= 0.5 * min_gap) {
        ++rep.jump_cells;
      } else {
        ++rep.sloped_cells;
      }
    }
  }
  if (interior > 0) {
    rep.flat_fraction = static_cast<double>(flat) / static_cast<double>(interior);
    const std::size_t off_jumps = interior - rep.jump_cells;
    rep.flat_fraction_off_jumps =
        off_jumps == 0 ? 1.0 : static_cast<double>(flat) / static_cast<double>(off_jumps);
  }
  return rep;
}

double indicator_critic(double s, double a) { return s + a < 0.0 ? 1.0 : 0.0; }

double rightmost_policy(double /*s*/) { return kActionLimit; }

DeadlockReport check_deadlock_fixed_point(const StateActionGrid& grid, double gamma,
                                          const Policy& policy, double h) {
  if (!(h > 0.0 && h < kActionLimit)) throw std::invalid_argument("h must lie in (0, 0.1)");
  DeadlockReport rep;
  std::vector<Transition> transitions;
  transitions.reserve(grid.size());
  for (int i = 0; i < grid.n_states; ++i) {
    for (int j = 0; j < grid.n_actions; ++j) {
      transitions.push_back(step(kToy, grid.state(i), grid.action(j)));
    }
  }
  const Batch batch = Batch::from(transitions);
  const Eigen::RowVectorXd y = td_targets(batch, gamma, indicator_critic, policy);
  double loss = 0.0;
  for (Eigen::Index k = 0; k < batch.size(); ++k) {
    const double q = indicator_critic(batch.s[k], batch.a[k]);
    loss += (q - y[k]) * (q - y[k]);
    rep.critic_violations += q != y[k] ? 1 : 0;
  }
  rep.critic_checks = static_cast<std::size_t>(batch.size());
  rep.critic_loss = loss / static_cast<double>(batch.size());

  for (int i = 0; i < grid.n_states; ++i) {
    const double s = grid.state(i);
    const double a = policy(s);
    const double quotient = (indicator_critic(s, a + h) - indicator_critic(s, a - h)) / (2.0 * h);
    rep.max_action_gradient = std::max(rep.max_action_gradient, std::abs(quotient));
    rep.actor_violations += quotient != 0.0 ? 1 : 0;
    ++rep.actor_checks;
  }
  return rep;
}

bool GapReport::all_hold() const {
  return std::all_of(entries.begin(), entries.end(),
                     [](const GapEntry& e) { return e.in_domain && e.holds; });
}

bool GapReport::all_hold_large_nu() const {
  return std::all_of(entries.begin(), entries.end(),
                     [](const GapEntry& e) { return e.in_domain && e.holds_large_nu; });
}

GapReport check_value_gap(double gamma, std::span<const double> deltas, double r1) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in (0, 1)");
  if (!(r1 > 0.0)) throw std::invalid_argument("r1 must be positive");
  GapReport rep;
  rep.gamma = gamma;
  rep.nu = gamma * gamma * (1.0 - gamma);
  rep.large_nu = gamma * gamma / (1.0 - gamma);
  for (double delta : deltas) {
    GapEntry e;
    e.delta = delta;
    e.in_domain = delta > 0.0 && delta < r1;
    if (e.in_domain) {
      int n = static_cast<int>(std::floor(std::log(delta / r1) / std::log(gamma))) + 1;
      // Guard the floor against log rounding: n is the least integer with
      // r1 gamma^n < delta.
      while (r1 * std::pow(gamma, n) >= delta) ++n;
      while (n > 1 && r1 * std::pow(gamma, n - 1) < delta) --n;
      e.n = n;
      e.a = r1 * std::pow(gamma, n);
      e.b = r1 * std::pow(gamma, n + 1);
      const bool ordered = e.b < e.a && e.a < delta;
      e.holds = ordered && delta * rep.nu < e.a - e.b;
      e.holds_large_nu = ordered && delta * rep.large_nu < e.a - e.b;
    }
    rep.entries.push_back(e);
  }
  return rep;
}

std::vector<double> log_spaced_interior(double lo, double hi, int count) {
  if (!(lo > 0.0 && hi > lo) || count < 1) throw std::invalid_argument("bad log-spaced range");
  std::vector<double> out;
  const double step = (std::log(hi) - std::log(lo)) / static_cast<double>(count + 1);
  for (int k = 1; k <= count; ++k) out.push_back(std::exp(std::log(lo) + step * k));
  return out;
}

std::vector<OracleCheck> run_oracle_suite(double gamma) {
  std::vector<OracleCheck> checks;
  const StateActionGrid square{101, 101};
  const StateActionGrid grid{101, 41};

  const DeadlockReport dead = check_deadlock_fixed_point(square, gamma);
  checks.push_back({"critic fixed point (TD target equals Q on 101x101 grid)",
                    dead.critic_violations == 0 && dead.critic_loss == 0.0,
                    std::to_string(dead.critic_violations) + " violations of " +
                        std::to_string(dead.critic_checks)});
  checks.push_back({"actor fixed point (dQ/da = 0 at a = 0.1 for every state)",
                    dead.actor_violations == 0,
                    "max |dQ/da| = " + fmt(dead.max_action_gradient)});

  const DeadlockReport control = check_deadlock_fixed_point(square, gamma, optimal_action);
  checks.push_back({"control policy pi = -0.1 breaks the critic fixed point",
                    control.critic_violations > 0,
                    std::to_string(control.critic_violations) + " violations"});

  const QTable right = compute_qpi(rightmost_policy, grid, gamma);
  bool indicator_ok = true;
  for (int i = 0; i < grid.n_states; ++i) {
    for (int j = 0; j < grid.n_actions; ++j) {
      indicator_ok &= right.value(i, j) == indicator_critic(grid.state(i), grid.action(j));
    }
  }
  checks.push_back({"Q^pi of pi = 0.1 is the indicator [s + a < 0]", indicator_ok, ""});

  const QTable left = compute_qpi(optimal_action, grid, gamma);
  const double reward[] = {1.0};
  const PiecewiseReport pr = check_piecewise_values(right, reward);
  const PiecewiseReport pl = check_piecewise_values(left, reward);
  checks.push_back({"Q^pi values lie in {0} U {gamma^n} (1e-12)", pr.all_members && pl.all_members,
                    "max error " + fmt(std::max(pr.max_membership_error, pl.max_membership_error))});
  checks.push_back({"Q^pi is flat off its plateau jumps",
                    pr.sloped_cells == 0 && pl.sloped_cells == 0 &&
                        pl.flat_fraction_off_jumps >= 0.95 && pr.flat_fraction_off_jumps >= 0.95,
                    "flat fraction (pi=-0.1) " + fmt(pl.flat_fraction) + ", " +
                        std::to_string(pl.distinct_values.size()) + " plateaus"});

  // 101x41 is not closed under the dynamics (odd action indices land
  // between states), so the exact residual is taken where the state step
  // equals the action step.
  const StateActionGrid aligned{201, 41};
  const BellmanResidual br = bellman_residual(compute_qpi(rightmost_policy, aligned, gamma),
                                              rightmost_policy);
  const BellmanResidual bl = bellman_residual(compute_qpi(optimal_action, aligned, gamma),
                                              optimal_action);
  const BellmanResidual coarse = bellman_residual(left, optimal_action);
  checks.push_back({"aligned-grid Bellman residual is 0 (1e-12, 201x41)",
                    br.max_residual <= 1e-12 && bl.max_residual <= 1e-12,
                    "max residual " + fmt(std::max(br.max_residual, bl.max_residual)) +
                        ", max snap " + fmt(std::max(br.max_state_snap, bl.max_state_snap)) +
                        "; unaligned 101x41 residual " + fmt(coarse.max_residual)});

  const std::vector<double> deltas = log_spaced_interior(1e-6, 0.9, 20);
  for (double g : {0.5, 0.9, 0.99}) {
    const GapReport gap = check_value_gap(g, deltas);
    const auto large_ok = std::count_if(gap.entries.begin(), gap.entries.end(),
                                        [](const GapEntry& e) { return e.holds_large_nu; });
    checks.push_back({"value gap construction, gamma = " + fmt(g), gap.all_hold(),
                      "nu = gamma^2(1-gamma) holds for all 20 deltas; gamma^2/(1-gamma) holds for " +
                          std::to_string(large_ok) + "/20"});
  }
  return checks;
}

void write_qtable_csv(std::ostream& out, const QTable& table) {
  const auto precision = out.precision(17);
  out << "s,a,q,n_steps\n";
  const auto& g = table.grid;
  for (int i = 0; i < g.n_states; ++i) {
    for (int j = 0; j < g.n_actions; ++j) {
      out << g.state(i) << ',' << g.action(j) << ',' << table.value(i, j) << ',';
      if (table.n_steps(i, j) == kNeverTerminates) {
        out << "inf";
      } else {
        out << table.n_steps(i, j);
      }
      out << '\n';
    }
  }
  out.precision(precision);
}

}  // namespace ddpglab
