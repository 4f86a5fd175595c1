#include "ddpglab/harness.hpp"

#include <algorithm>
#include <deque>
#include <stdexcept>

namespace ddpglab {
namespace {

struct OutcomeWindow {
  explicit OutcomeWindow(int size) : size_(static_cast<std::size_t>(size)) {}

  void push(bool ok) {
    outcomes_.push_back(ok);
    successes_ += ok ? 1 : 0;
    if (outcomes_.size() > size_) {
      successes_ -= outcomes_.front() ? 1 : 0;
      outcomes_.pop_front();
    }
  }
  bool all_successful() const { return outcomes_.size() == size_ && successes_ == size_; }

 private:
  std::size_t size_;
  std::deque<bool> outcomes_;
  std::size_t successes_ = 0;
};

// Noise-free rollout of the learned actor from s0; true if rewarded.
bool greedy_episode_succeeds(const AgentState& agent, const EnvSpec& env) {
  Episode ep = reset(env);
  for (;;) {
    const StepOutcome out = advance(env, ep, actor_action(agent, ep.s));
    if (out.transition.r > 0.0) return true;
    if (out.episode_over) return false;
  }
}

// Evaluates max|Q| and max|pi| over the probe grid with its own buffers.
class Prober {
 public:
  explicit Prober(const ProbeGrid& grid)
      : states_(grid.states()),
        input_(2, static_cast<Eigen::Index>(grid.n_states) * grid.n_actions) {
    for (int i = 0; i < grid.n_states; ++i) {
      for (int j = 0; j < grid.n_actions; ++j) {
        input_(0, i * grid.n_actions + j) = states_[i];
        input_(1, i * grid.n_actions + j) = grid.action(j);
      }
    }
  }

  DriftSample operator()(const AgentState& agent, std::int64_t step) {
    forward(agent.actor, states_, actor_);
    forward(agent.critic, input_, critic_);
    return DriftSample{step, critic_.output.cwiseAbs().maxCoeff(),
                       actor_.output.cwiseAbs().maxCoeff()};
  }

 private:
  Eigen::RowVectorXd states_;
  Eigen::MatrixXd input_;
  ForwardCache actor_;
  ForwardCache critic_;
};

double mean_policy_action(const AgentState& agent, const ProbeGrid& grid) {
  return evaluate(agent.actor, grid.states()).mean();
}

bool wants_snapshot(const RunConfig& config, std::int64_t step) {
  return std::find(config.snapshot_steps.begin(), config.snapshot_steps.end(), step) !=
         config.snapshot_steps.end();
}

}  // namespace

RunMetrics run_training(const RunConfig& config) {
  config.validate();
  if (config.env.kind != EnvKind::one_d_toy) {
    throw std::invalid_argument("run_training needs the one_d_toy environment; use run_drift");
  }
  Rng actor_init = derive(config.seed, Stream::actor_init);
  Rng critic_init = derive(config.seed, Stream::critic_init);
  Rng noise_rng = derive(config.seed, Stream::noise);
  Rng batch_rng = derive(config.seed, Stream::minibatch);
  Rng candidate_rng = derive(config.seed, Stream::candidates);

  AgentState agent = make_agent(config.agent, actor_init, critic_init);
  const ProbeGrid grid;
  Prober probe(grid);
  RunMetrics m;
  NoiseState noise_state;
  OutcomeWindow window(config.success_window);
  Episode episode = reset(config.env);
  bool episode_rewarded = false;
  Batch batch;
  const auto batch_size = static_cast<std::size_t>(config.agent.batch_size);

  try {
    if (wants_snapshot(config, 0)) m.snapshots.push_back(export_critic_snapshot(agent, grid, 0));
    for (std::int64_t t = 1; t <= config.total_steps; ++t) {
      const bool substituted = config.substitute_optimal_at && t > *config.substitute_optimal_at;
      const double a = substituted
                           ? optimal_action(episode.s)
                           : select_action(agent, episode.s, config.noise, noise_state, noise_rng);
      const StepOutcome out = advance(config.env, episode, a);
      agent.buffer.push(out.transition);
      m.steps_run = t;
      if (out.transition.r > 0.0) {
        episode_rewarded = true;
        if (!m.first_reward_step) m.first_reward_step = t;
      }

      if (out.episode_over) {
        const bool ok = substituted ? greedy_episode_succeeds(agent, config.env) : episode_rewarded;
        window.push(ok);
        TrainingPhase phase{m.episodes, t, episode.steps, 0};
        for (int k = 0; k < episode.steps; ++k) {
          agent.buffer.sample(batch_size, batch_rng, batch);
          phase.rewarded += batch.rewarded();
          train_iteration(agent, batch, config.critic_updates_per_step,
                          config.actor_updates_per_step, candidate_rng);
        }
        m.batches_drawn += phase.iterations;
        m.rewarded_sampled += phase.rewarded;
        m.rewarded_per_training_phase.push_back(phase);
        m.episodes += 1;
        episode = reset(config.env);
        episode_rewarded = false;
        noise_state.reset_episode();
      }

      if (config.trace_interval > 0 && t % config.trace_interval == 0) {
        m.drift_trace.push_back(probe(agent, t));
      }
      if (wants_snapshot(config, t)) m.snapshots.push_back(export_critic_snapshot(agent, grid, t));
      if (t % config.success_check_interval == 0 && window.all_successful()) {
        m.success = true;
        m.success_step = t;
        break;
      }
    }
    m.final_policy_mean_action = mean_policy_action(agent, grid);
  } catch (const DivergenceError& e) {
    m.diverged = true;
    m.success = false;
    m.success_step.reset();
    m.divergence_message = e.what();
  }
  return m;
}

RunMetrics substitute_optimal_behaviour(const RunConfig& config) {
  if (!config.substitute_optimal_at) {
    throw std::invalid_argument("substitute_optimal_behaviour needs substitute_optimal_at");
  }
  return run_training(config);
}

RunMetrics run_drift(const RunConfig& config) {
  config.validate();
  if (config.env.kind != EnvKind::drift) throw std::invalid_argument("run_drift needs env_kind=drift");
  Rng actor_init = derive(config.seed, Stream::actor_init);
  Rng critic_init = derive(config.seed, Stream::critic_init);
  Rng sample_rng = derive(config.seed, Stream::drift_samples);
  Rng candidate_rng = derive(config.seed, Stream::candidates);

  AgentState agent = make_agent(config.agent, actor_init, critic_init);
  const ProbeGrid grid;
  Prober probe(grid);
  const std::int64_t interval = config.trace_interval > 0 ? config.trace_interval : 10;
  RunMetrics m;
  Batch batch;
  batch.resize(config.agent.batch_size);
  try {
    m.drift_trace.push_back(probe(agent, 0));
    for (std::int64_t t = 1; t <= config.total_steps; ++t) {
      for (Eigen::Index i = 0; i < batch.size(); ++i) batch.set(i, drift_sample(sample_rng));
      train_iteration(agent, batch, config.critic_updates_per_step, config.actor_updates_per_step,
                      candidate_rng);
      m.steps_run = t;
      m.batches_drawn += 1;
      if (t % interval == 0) m.drift_trace.push_back(probe(agent, t));
      if (wants_snapshot(config, t)) m.snapshots.push_back(export_critic_snapshot(agent, grid, t));
    }
    m.final_policy_mean_action = mean_policy_action(agent, grid);
  } catch (const DivergenceError& e) {
    m.diverged = true;
    m.divergence_message = e.what();
  }
  return m;
}

std::vector<TrainingPhase> count_rewarded_in_minibatches(const RunMetrics& run) {
  return run.rewarded_per_training_phase;
}

DriftVerdict assess_drift(const RunMetrics& run, std::int64_t window) {
  DriftVerdict v;
  const auto& trace = run.drift_trace;
  if (trace.empty()) return v;
  for (const DriftSample& d : trace) v.peak_max_abs_pi = std::max(v.peak_max_abs_pi, d.max_abs_pi);
  v.saturated = v.peak_max_abs_pi >= 0.099;
  v.drift_right = run.final_policy_mean_action > 0.0;
  const std::int64_t from = trace.back().step - window;
  const auto start = std::find_if(trace.begin(), trace.end(),
                                  [from](const DriftSample& d) { return d.step >= from; });
  const double ref = start->max_abs_q;
  for (auto it = start; it != trace.end(); ++it) {
    const double change = std::abs(it->max_abs_q - ref);
    v.late_q_abs_change = std::max(v.late_q_abs_change, change);
    v.late_q_change = std::max(v.late_q_change, ref > 0.0 ? change / ref : change);
  }
  return v;
}

std::optional<double> mean_rewarded_per_phase(const RunMetrics& run, std::int64_t phase_length,
                                              std::int64_t from_step) {
  std::int64_t total = 0;
  std::int64_t phases = 0;
  for (const auto& p : run.rewarded_per_training_phase) {
    if (p.iterations == phase_length && p.end_step > from_step) {
      total += p.rewarded;
      ++phases;
    }
  }
  if (phases == 0) return std::nullopt;
  return static_cast<double>(total) / static_cast<double>(phases);
}

}  // namespace ddpglab
