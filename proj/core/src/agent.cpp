#include "ddpglab/agent.hpp"

#include <cmath>
#include <stdexcept>

namespace ddpglab {
namespace {

std::vector<int> topology(int input_dim, const std::vector<int>& hidden) {
  std::vector<int> sizes{input_dim};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(1);
  return sizes;
}

double loss_scale(const AgentState& agent, Eigen::Index batch) {
  return agent.config.loss_reduction == LossReduction::mean ? 1.0 / static_cast<double>(batch)
                                                            : 1.0;
}

void stack_critic_input(Eigen::MatrixXd& out, const Eigen::RowVectorXd& s,
                        const Eigen::Ref<const Eigen::RowVectorXd>& a) {
  out.resize(2, s.size());
  out.row(0) = s;
  out.row(1) = a;
}

// One Adam step pulling pi(s_i) towards goal_i on the rows where mask_i is
// set. Returns the pre-step loss.
double regress_actor(AgentState& agent, const Batch& batch, const Eigen::RowVectorXd& goal,
                     const Eigen::Array<bool, 1, Eigen::Dynamic>& mask) {
  auto& ws = agent.ws;
  forward(agent.actor, batch.s, ws.actor);
  const Eigen::RowVectorXd diff =
      mask.select(ws.actor.output.row(0) - goal, Eigen::RowVectorXd::Zero(batch.size()));
  const double scale = loss_scale(agent, batch.size());
  const double loss = scale * diff.squaredNorm();
  if (!std::isfinite(loss)) throw DivergenceError("non-finite actor regression loss");
  if (!mask.any()) return loss;
  ws.output_grad = 2.0 * scale * diff;
  backward(agent.actor, ws.actor, ws.output_grad, &ws.actor_grads, nullptr);
  adam_step(agent.actor_opt, agent.actor, ws.actor_grads);
  return loss;
}

}  // namespace

void AgentConfig::validate() const {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in [0, 1)");
  if (!(polyak >= 0.0 && polyak <= 1.0)) throw std::invalid_argument("polyak must lie in [0, 1]");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be positive");
  if (argmax_candidates < 1) throw std::invalid_argument("argmax_candidates must be positive");
  if (replay_capacity < 1) throw std::invalid_argument("replay_capacity must be positive");
  for (int h : hidden_layers) {
    if (h < 1) throw std::invalid_argument("hidden layer sizes must be positive");
  }
}

AgentState make_agent(const AgentConfig& config, Rng& actor_init, Rng& critic_init) {
  config.validate();
  MlpParams actor = init_mlp(topology(1, config.hidden_layers), config.hidden_activation,
                             OutputTransform::scaled_tanh(config.action_limit), actor_init);
  MlpParams critic = init_mlp(topology(2, config.hidden_layers), config.hidden_activation,
                              OutputTransform::identity(), critic_init);
  AgentState agent{config, {}, {}, {}, {}, {}, {}, ReplayBuffer(config.replay_capacity), {}};
  install_networks(agent, std::move(actor), std::move(critic));
  return agent;
}

void install_networks(AgentState& agent, MlpParams actor, MlpParams critic) {
  if (actor.input_dim() != 1 || actor.output_dim() != 1 || critic.input_dim() != 2 ||
      critic.output_dim() != 1) {
    throw std::invalid_argument("actor must map 1 -> 1 and critic 2 -> 1");
  }
  const auto& c = agent.config;
  agent.actor = std::move(actor);
  agent.critic = std::move(critic);
  agent.target_actor = agent.actor;
  agent.target_critic = agent.critic;
  agent.actor_opt = AdamState::for_params(agent.actor, c.actor_lr, c.adam_beta1, c.adam_beta2,
                                          c.adam_epsilon);
  agent.critic_opt = AdamState::for_params(agent.critic, c.critic_lr, c.adam_beta1,
                                           c.adam_beta2, c.adam_epsilon);
  agent.ws = AgentWorkspace{};
  agent.ws.actor_grads = MlpGradients::zeros_like(agent.actor);
  agent.ws.critic_grads = MlpGradients::zeros_like(agent.critic);
}

double actor_action(const AgentState& agent, double s) {
  const double in[1] = {s};
  return evaluate(agent.actor, in)[0];
}

double critic_value(const AgentState& agent, double s, double a) {
  const double in[2] = {s, a};
  return evaluate(agent.critic, in)[0];
}

double select_action(const AgentState& agent, double s, const NoiseSpec& noise,
                     NoiseState& noise_state, Rng& rng) {
  return apply_noise(noise, noise_state, actor_action(agent, s), agent.config.action_limit, rng);
}

Eigen::RowVectorXd critic_targets(AgentState& agent, const Batch& batch) {
  if (batch.size() == 0) throw std::invalid_argument("empty batch");
  auto& ws = agent.ws;
  forward(agent.target_actor, batch.s_next, ws.target_actor);
  stack_critic_input(ws.critic_input, batch.s_next, ws.target_actor.output.row(0));
  forward(agent.target_critic, ws.critic_input, ws.target_critic);
  const auto& bootstrap = ws.target_critic.output.row(0);
  Eigen::RowVectorXd y(batch.size());
  for (Eigen::Index i = 0; i < batch.size(); ++i) {
    // Terminal rows never read the bootstrap value, even if it is garbage.
    y[i] = batch.terminal[i] > 0.0
               ? batch.r[i]
               : batch.r[i] + agent.config.gamma * bootstrap[i];
  }
  if (!y.allFinite()) throw DivergenceError("non-finite TD target");
  return y;
}

double critic_update(AgentState& agent, const Batch& batch, const Eigen::RowVectorXd& targets) {
  if (targets.size() != batch.size()) throw std::invalid_argument("targets/batch size mismatch");
  auto& ws = agent.ws;
  stack_critic_input(ws.critic_input, batch.s, batch.a);
  forward(agent.critic, ws.critic_input, ws.critic);
  const Eigen::RowVectorXd err = ws.critic.output.row(0) - targets;
  const double scale = loss_scale(agent, batch.size());
  const double loss = scale * err.squaredNorm();
  if (!std::isfinite(loss)) throw DivergenceError("non-finite critic loss");
  ws.output_grad = 2.0 * scale * err;
  backward(agent.critic, ws.critic, ws.output_grad, &ws.critic_grads, nullptr);
  adam_step(agent.critic_opt, agent.critic, ws.critic_grads);
  return loss;
}

double critic_update(AgentState& agent, const Batch& batch) {
  return critic_update(agent, batch, critic_targets(agent, batch));
}

double actor_update_dpg(AgentState& agent, const Batch& batch) {
  if (batch.size() == 0) throw std::invalid_argument("empty batch");
  auto& ws = agent.ws;
  forward(agent.actor, batch.s, ws.actor);
  stack_critic_input(ws.critic_input, batch.s, ws.actor.output.row(0));
  forward(agent.critic, ws.critic_input, ws.critic);

  // L = -scale * sum_i Q(s_i, pi(s_i)); only dQ/da is needed from the critic.
  const double scale = loss_scale(agent, batch.size());
  ws.output_grad = Eigen::RowVectorXd::Constant(batch.size(), -scale);
  backward(agent.critic, ws.critic, ws.output_grad, nullptr, &ws.input_grad);
  const Eigen::RowVectorXd dq_da = ws.input_grad.row(1) / -scale;
  if (!dq_da.allFinite()) throw DivergenceError("non-finite action gradient");

  ws.output_grad = ws.input_grad.row(1);
  backward(agent.actor, ws.actor, ws.output_grad, &ws.actor_grads, nullptr);
  adam_step(agent.actor_opt, agent.actor, ws.actor_grads);
  return dq_da.cwiseAbs().mean();
}

Eigen::RowVectorXd argmax_goals(AgentState& agent, const Batch& batch,
                                std::span<const double> candidates) {
  if (batch.size() == 0) throw std::invalid_argument("empty batch");
  if (candidates.empty()) throw std::invalid_argument("argmax update needs at least one candidate");
  auto& ws = agent.ws;
  const Eigen::Index n = batch.size();
  const auto k = static_cast<Eigen::Index>(candidates.size());

  // Column i * K + j holds (s_i, b_j).
  ws.candidate_input.resize(2, n * k);
  for (Eigen::Index i = 0; i < n; ++i) {
    ws.candidate_input.block(0, i * k, 1, k).setConstant(batch.s[i]);
    for (Eigen::Index j = 0; j < k; ++j) ws.candidate_input(1, i * k + j) = candidates[j];
  }
  forward(agent.critic, ws.candidate_input, ws.candidate_critic);
  const auto& q = ws.candidate_critic.output;

  Eigen::RowVectorXd goal(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index best = 0;
    double best_q = q(0, i * k);
    for (Eigen::Index j = 1; j < k; ++j) {
      if (q(0, i * k + j) > best_q) {
        best_q = q(0, i * k + j);
        best = j;
      }
    }
    goal[i] = candidates[best];
  }
  return goal;
}

double actor_update_argmax(AgentState& agent, const Batch& batch,
                           std::span<const double> candidates) {
  const Eigen::RowVectorXd goal = argmax_goals(agent, batch, candidates);
  return regress_actor(agent, batch, goal,
                       Eigen::Array<bool, 1, Eigen::Dynamic>::Constant(batch.size(), true));
}

double actor_update_argmax(AgentState& agent, const Batch& batch, Rng& rng) {
  auto& c = agent.ws.candidates;
  c.resize(static_cast<std::size_t>(agent.config.argmax_candidates));
  const double limit = agent.config.action_limit;
  for (double& b : c) b = rng.uniform(-limit, limit);
  return actor_update_argmax(agent, batch, std::span<const double>(c));
}

double actor_update_regression(AgentState& agent, const Batch& batch,
                               const Eigen::RowVectorXd& targets) {
  if (targets.size() != batch.size()) throw std::invalid_argument("targets/batch size mismatch");
  auto& ws = agent.ws;
  forward(agent.actor, batch.s, ws.actor);
  stack_critic_input(ws.critic_input, batch.s, ws.actor.output.row(0));
  forward(agent.critic, ws.critic_input, ws.critic);
  const Eigen::Array<bool, 1, Eigen::Dynamic> mask =
      targets.array() > ws.critic.output.row(0).array();
  return regress_actor(agent, batch, batch.a, mask);
}

void update_targets(AgentState& agent) {
  polyak_update(agent.target_actor, agent.actor, agent.config.polyak);
  polyak_update(agent.target_critic, agent.critic, agent.config.polyak);
}

IterationStats train_iteration(AgentState& agent, const Batch& batch, int critic_updates,
                               int actor_updates, Rng& candidate_rng) {
  IterationStats stats;
  const Eigen::RowVectorXd y = critic_targets(agent, batch);
  for (int k = 0; k < critic_updates; ++k) stats.critic_loss = critic_update(agent, batch, y);
  for (int k = 0; k < actor_updates; ++k) {
    switch (agent.config.actor_update) {
      case ActorUpdateRule::dpg:
        stats.actor_value = actor_update_dpg(agent, batch);
        break;
      case ActorUpdateRule::argmax:
        stats.actor_value = actor_update_argmax(agent, batch, candidate_rng);
        break;
      case ActorUpdateRule::regression:
        stats.actor_value = actor_update_regression(agent, batch, y);
        break;
    }
  }
  update_targets(agent);
  return stats;
}

}  // namespace ddpglab
