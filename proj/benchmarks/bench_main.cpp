#include <benchmark/benchmark.h>

#include "ddpglab/agent.hpp"
#include "ddpglab/env.hpp"
#include "ddpglab/harness.hpp"

using namespace ddpglab;

namespace {

AgentState fresh_agent(ActorUpdateRule rule = ActorUpdateRule::dpg) {
  AgentConfig cfg;
  cfg.actor_update = rule;
  Rng a(1), c(2);
  return make_agent(cfg, a, c);
}

Batch random_batch(int n, Rng& rng) {
  Batch b;
  b.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double s = rng.uniform01();
    b.set(i, step(EnvSpec{}, s, rng.uniform(-0.1, 0.1)));
  }
  return b;
}

void BM_CriticForward(benchmark::State& state) {
  AgentState agent = fresh_agent();
  Rng rng(3);
  const Batch batch = random_batch(static_cast<int>(state.range(0)), rng);
  Eigen::MatrixXd in(2, batch.size());
  in.row(0) = batch.s;
  in.row(1) = batch.a;
  ForwardCache cache;
  for (auto _ : state) {
    forward(agent.critic, in, cache);
    benchmark::DoNotOptimize(cache.output.data());
  }
}
BENCHMARK(BM_CriticForward)->Arg(1)->Arg(100)->Arg(10000);

void BM_CriticForwardBackward(benchmark::State& state) {
  AgentState agent = fresh_agent();
  Rng rng(3);
  const Batch batch = random_batch(100, rng);
  Eigen::MatrixXd in(2, batch.size());
  in.row(0) = batch.s;
  in.row(1) = batch.a;
  ForwardCache cache;
  MlpGradients grads = MlpGradients::zeros_like(agent.critic);
  const Eigen::MatrixXd g = Eigen::MatrixXd::Ones(1, batch.size());
  for (auto _ : state) {
    forward(agent.critic, in, cache);
    backward(agent.critic, cache, g, &grads, nullptr);
    benchmark::DoNotOptimize(grads.weights[1].data());
  }
}
BENCHMARK(BM_CriticForwardBackward);

void BM_AdamStep(benchmark::State& state) {
  AgentState agent = fresh_agent();
  MlpGradients grads = MlpGradients::zeros_like(agent.critic);
  for (auto& w : grads.weights) w.setConstant(1e-3);
  for (auto _ : state) adam_step(agent.critic_opt, agent.critic, grads);
}
BENCHMARK(BM_AdamStep);

void BM_PolyakTargets(benchmark::State& state) {
  AgentState agent = fresh_agent();
  for (auto _ : state) update_targets(agent);
}
BENCHMARK(BM_PolyakTargets);

void BM_TrainIteration(benchmark::State& state) {
  AgentState agent = fresh_agent(static_cast<ActorUpdateRule>(state.range(0)));
  Rng rng(3), cand(4);
  const Batch batch = random_batch(100, rng);
  for (auto _ : state) train_iteration(agent, batch, 1, 1, cand);
}
BENCHMARK(BM_TrainIteration)
    ->Arg(static_cast<int>(ActorUpdateRule::dpg))
    ->Arg(static_cast<int>(ActorUpdateRule::argmax))
    ->Arg(static_cast<int>(ActorUpdateRule::regression));

void BM_ReplaySample(benchmark::State& state) {
  ReplayBuffer buffer(1'000'000);
  Rng rng(5);
  for (int i = 0; i < 100'000; ++i) {
    buffer.push(step(EnvSpec{}, rng.uniform01(), rng.uniform(-0.1, 0.1)));
  }
  Batch batch;
  for (auto _ : state) {
    buffer.sample(100, rng, batch);
    benchmark::DoNotOptimize(batch.s.data());
  }
}
BENCHMARK(BM_ReplaySample);

void BM_TrainingRun(benchmark::State& state) {
  RunConfig cfg;
  cfg.total_steps = state.range(0);
  cfg.success_check_interval = cfg.total_steps + 1;
  for (auto _ : state) benchmark::DoNotOptimize(run_training(cfg).episodes);
}
BENCHMARK(BM_TrainingRun)->Arg(2000)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
