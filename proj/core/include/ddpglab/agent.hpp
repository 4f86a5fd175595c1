#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ddpglab/env.hpp"
#include "ddpglab/net.hpp"
#include "ddpglab/noise.hpp"
#include "ddpglab/replay_buffer.hpp"
#include "ddpglab/rng.hpp"

namespace ddpglab {

enum class ActorUpdateRule {
  dpg,         // deterministic policy gradient through the critic
  argmax,      // regress towards the best of K uniformly drawn actions
  regression,  // regress towards a_i whenever y_i > Q(s_i, pi(s_i))
};

enum class LossReduction { mean, sum };

struct AgentConfig {
  std::vector<int> hidden_layers{64, 64};
  Activation hidden_activation = Activation::relu;
  double gamma = 0.99;
  double polyak = 0.995;
  double actor_lr = 1e-3;
  double critic_lr = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  ActorUpdateRule actor_update = ActorUpdateRule::dpg;
  int argmax_candidates = 100;
  int batch_size = 100;
  std::size_t replay_capacity = 1'000'000;
  LossReduction loss_reduction = LossReduction::mean;
  double action_limit = kActionLimit;

  void validate() const;
};

/// Scratch buffers reused across updates so the hot loop does not allocate.
struct AgentWorkspace {
  ForwardCache actor;
  ForwardCache critic;
  ForwardCache target_actor;
  ForwardCache target_critic;
  MlpGradients actor_grads;
  MlpGradients critic_grads;
  Eigen::MatrixXd critic_input;
  Eigen::MatrixXd input_grad;
  Eigen::MatrixXd output_grad;
  std::vector<double> candidates;
  // The argmax rule evaluates the critic on batch x candidates columns; kept
  // apart so the per-batch buffers are not resized back and forth.
  ForwardCache candidate_critic;
  Eigen::MatrixXd candidate_input;
};

/// Actor (1 -> hidden -> 1, scaled tanh), critic ((s, a) -> hidden -> 1),
/// their smoothed targets, one Adam state each and the replay buffer.
struct AgentState {
  AgentConfig config;
  MlpParams actor;
  MlpParams critic;
  MlpParams target_actor;
  MlpParams target_critic;
  AdamState actor_opt;
  AdamState critic_opt;
  ReplayBuffer buffer;
  AgentWorkspace ws;
};

AgentState make_agent(const AgentConfig& config, Rng& actor_init, Rng& critic_init);

/// Replaces the networks (and their targets) with the given parameters and
/// resets both optimizers. Used to plug hand-built networks into the rules.
void install_networks(AgentState& agent, MlpParams actor, MlpParams critic);

double actor_action(const AgentState& agent, double s);
double critic_value(const AgentState& agent, double s, double a);

/// Behaviour policy: the actor's action passed through the noise process.
double select_action(const AgentState& agent, double s, const NoiseSpec& noise,
                     NoiseState& noise_state, Rng& rng);

/// y_i = r_i + gamma (1 - t_i) q(s'_i, pi(s'_i)) for arbitrary callables.
template <typename Critic, typename Policy>
Eigen::RowVectorXd td_targets(const Batch& batch, double gamma, Critic&& q, Policy&& pi) {
  Eigen::RowVectorXd y(batch.size());
  for (Eigen::Index i = 0; i < batch.size(); ++i) {
    const double bootstrap = batch.terminal[i] > 0.0 ? 0.0 : q(batch.s_next[i], pi(batch.s_next[i]));
    y[i] = batch.r[i] + gamma * (1.0 - batch.terminal[i]) * bootstrap;
  }
  return y;
}

/// TD targets from the target actor and target critic. Throws
/// DivergenceError on non-finite targets.
Eigen::RowVectorXd critic_targets(AgentState& agent, const Batch& batch);

/// One Adam step on the critic against the squared TD error; returns the
/// pre-step loss (mean or sum per config.loss_reduction).
double critic_update(AgentState& agent, const Batch& batch, const Eigen::RowVectorXd& targets);
double critic_update(AgentState& agent, const Batch& batch);

/// Deterministic policy gradient step. Returns the batch mean of
/// |dQ/da| evaluated at a = pi(s_i).
double actor_update_dpg(AgentState& agent, const Batch& batch);

/// c_i = the candidate maximizing Q(s_i, .); ties go to the lowest index.
Eigen::RowVectorXd argmax_goals(AgentState& agent, const Batch& batch,
                                std::span<const double> candidates);

/// Regresses pi(s_i) towards argmax_goals. Returns the pre-step regression
/// loss.
double actor_update_argmax(AgentState& agent, const Batch& batch,
                           std::span<const double> candidates);
double actor_update_argmax(AgentState& agent, const Batch& batch, Rng& rng);

/// Regresses pi(s_i) towards a_i on the samples where y_i > Q(s_i, pi(s_i)).
/// No optimizer step is taken when no sample passes the filter.
double actor_update_regression(AgentState& agent, const Batch& batch,
                               const Eigen::RowVectorXd& targets);

/// Polyak-averages both target networks towards their sources.
void update_targets(AgentState& agent);

struct IterationStats {
  double critic_loss = 0.0;
  double actor_value = 0.0;  // whatever the actor rule returned last
};

/// One training iteration on a fixed batch: `critic_updates` critic steps,
/// `actor_updates` actor steps with the configured rule, then target update.
IterationStats train_iteration(AgentState& agent, const Batch& batch, int critic_updates,
                               int actor_updates, Rng& candidate_rng);

}  // namespace ddpglab
