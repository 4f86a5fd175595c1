#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ddpglab/agent.hpp"
#include "ddpglab/config.hpp"
#include "ddpglab/grid.hpp"

namespace ddpglab {

inline constexpr int kRunSchemaVersion = 1;

struct DriftSample {
  std::int64_t step = 0;
  double max_abs_q = 0.0;
  double max_abs_pi = 0.0;
};

/// Bookkeeping for one post-episode training phase.
struct TrainingPhase {
  std::int64_t episode = 0;     // 0-based episode index
  std::int64_t end_step = 0;    // environment step at which the episode ended
  std::int64_t iterations = 0;  // minibatches drawn in this phase
  std::int64_t rewarded = 0;    // rewarded transitions across those minibatches
};

/// Q and pi over a probe grid; q is state-major (q[i * n_actions + j]).
struct CriticSnapshot {
  std::int64_t step = 0;
  ProbeGrid grid;
  std::vector<double> q;
  std::vector<double> pi;

  double q_at(int i, int j) const { return q[static_cast<std::size_t>(i * grid.n_actions + j)]; }
};

struct RunMetrics {
  bool success = false;
  std::optional<std::int64_t> success_step;
  std::optional<std::int64_t> first_reward_step;
  bool diverged = false;
  std::string divergence_message;
  std::int64_t steps_run = 0;
  std::int64_t episodes = 0;
  std::vector<TrainingPhase> rewarded_per_training_phase;
  std::int64_t batches_drawn = 0;
  std::int64_t rewarded_sampled = 0;  // summed over every minibatch drawn
  std::vector<DriftSample> drift_trace;
  double final_policy_mean_action = 0.0;
  std::vector<CriticSnapshot> snapshots;

  bool failed() const { return !success && !diverged; }
};

/// The rollout/training loop: act, store, and after each episode (terminal
/// or length cap) run one training iteration per episode step; every
/// `success_check_interval` steps stop with success if the last
/// `success_window` episodes all collected the reward.
///
/// When `substitute_optimal_at` is set, every step after it acts with the
/// optimal action and no noise. Episode outcomes are then judged by a
/// noise-free rollout of the learned actor, since behaviour episodes would
/// succeed trivially.
RunMetrics run_training(const RunConfig& config);

/// run_training with a mandatory `substitute_optimal_at`.
RunMetrics substitute_optimal_behaviour(const RunConfig& config);

/// Reward-free training on uniformly drawn drift transitions, no rollouts.
/// Traces max|Q| and max|pi| over the probe grid every `trace_interval`
/// steps (10 when unset).
RunMetrics run_drift(const RunConfig& config);

struct DriftVerdict {
  double peak_max_abs_pi = 0.0;
  bool saturated = false;       // peak_max_abs_pi >= 0.099
  bool drift_right = false;     // final mean policy action > 0
  // Over the last `window` steps: max_t |m(t) - m(T - window)| with m the
  // traced max|Q|, relative to m(T - window) and absolute.
  double late_q_change = 0.0;
  double late_q_abs_change = 0.0;
};

DriftVerdict assess_drift(const RunMetrics& run, std::int64_t window = 1000);

/// Per-phase rewarded-sample counts of a finished training run.
std::vector<TrainingPhase> count_rewarded_in_minibatches(const RunMetrics& run);

/// Mean rewarded count over full-length phases (iterations == phase_length)
/// ending after `from_step`; nullopt when there is no such phase.
std::optional<double> mean_rewarded_per_phase(const RunMetrics& run, std::int64_t phase_length,
                                              std::int64_t from_step);

/// Q_theta and pi_psi of an agent over the probe grid.
CriticSnapshot export_critic_snapshot(const AgentState& agent, const ProbeGrid& grid,
                                      std::int64_t step);

/// Same, for arbitrary callables (used to dump the analytic deadlock pair).
CriticSnapshot export_snapshot(const std::function<double(double, double)>& q,
                               const std::function<double(double)>& pi, const ProbeGrid& grid,
                               std::int64_t step);

// ---- sweeps ---------------------------------------------------------------

struct SweepRow {
  std::uint64_t seed = 0;
  bool success = false;
  std::optional<std::int64_t> success_step;
  std::optional<std::int64_t> first_reward_step;
  double final_policy_mean_action = 0.0;
  bool diverged = false;

  bool operator==(const SweepRow&) const = default;
};

struct SweepResult {
  std::vector<SweepRow> rows;      // sorted by seed
  std::vector<RunMetrics> runs;    // same order as rows; empty if not kept
};

struct SweepOptions {
  int parallelism = 1;
  bool keep_metrics = true;
  // Called after each finished run with (finished, total). May be invoked
  // from worker threads, one call at a time.
  std::function<void(std::size_t, std::size_t)> progress;
};

SweepRow summarize(std::uint64_t seed, const RunMetrics& run);

/// Runs `base` once per seed. Rows are identical for any parallelism.
SweepResult run_sweep(const RunConfig& base, std::span<const std::uint64_t> seeds,
                      const SweepOptions& options = {});

/// Same, with an arbitrary per-run function (e.g. run_drift).
SweepResult run_sweep(const RunConfig& base, std::span<const std::uint64_t> seeds,
                      const SweepOptions& options,
                      const std::function<RunMetrics(const RunConfig&)>& runner);

struct SweepSummary {
  std::size_t runs = 0;
  std::size_t successes = 0;
  std::size_t failures = 0;
  std::size_t diverged = 0;

  double success_rate() const;
  double failure_rate() const;
};

SweepSummary summarize(std::span<const SweepRow> rows);

/// Fraction of runs that succeeded at or before each checkpoint
/// (interval, 2 * interval, ..., total_steps).
std::vector<std::pair<std::int64_t, double>> success_curve(std::span<const SweepRow> rows,
                                                           std::int64_t interval,
                                                           std::int64_t total_steps);

struct CorrelationBin {
  std::int64_t lo = 0;  // exclusive
  std::optional<std::int64_t> hi;  // inclusive; nullopt = unbounded
  std::size_t count = 0;
  std::size_t failures = 0;
  std::optional<double> failure_fraction;  // nullopt for empty bins
};

struct CorrelationReport {
  std::vector<CorrelationBin> bins;
  std::size_t never_rewarded = 0;
  std::size_t never_rewarded_failures = 0;
};

/// Bin edges used for the first-reward/failure table.
inline constexpr std::int64_t kFirstRewardBinEdges[] = {0, 50, 100, 200, 400, 800, 1600};

/// Bins runs by first_reward_step into (edges[k], edges[k + 1]]; the last bin
/// is open-ended. Diverged runs are left out.
CorrelationReport first_reward_failure_correlation(std::span<const SweepRow> rows,
                                                   std::span<const std::int64_t> edges);

// ---- file formats -----------------------------------------------------------

/// seed,success,success_step,first_reward_step,final_policy_mean_action,diverged
void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows);
std::vector<SweepRow> read_sweep_csv(std::istream& in);

/// step,max_abs_q,max_abs_pi,seed
void write_drift_csv_header(std::ostream& out);
void write_drift_csv_rows(std::ostream& out, std::uint64_t seed,
                          std::span<const DriftSample> trace);

/// step,s,a,q,pi_of_s
void write_snapshot_csv_header(std::ostream& out);
void write_snapshot_csv_rows(std::ostream& out, const CriticSnapshot& snapshot);

/// {"schema_version": 1, "config": {...}, "metrics": {...}}
nlohmann::json run_to_json(const RunConfig& config, const RunMetrics& metrics);

}  // namespace ddpglab
