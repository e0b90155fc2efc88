#include <benchmark/benchmark.h>

#include "drsrl/actions.hpp"
#include "drsrl/episode.hpp"
#include "drsrl/policy.hpp"
#include "drsrl/replay.hpp"
#include "drsrl/scenario.hpp"

namespace {

using namespace drsrl;

void BM_WorldStep(benchmark::State& state) {
  const auto spec = ScenarioSpec::defaults(ScenarioId::IJ);
  World w = instantiate_scenario(spec);
  const std::vector<ControlInput> idle(w.av_count());
  for (auto _ : state) {
    if (check_termination(w, w.horizon()).done()) w = instantiate_scenario(spec);
    w.step(idle);
  }
}
BENCHMARK(BM_WorldStep);

void BM_Observe(benchmark::State& state) {
  const RunConfig cfg = RunConfig::for_scenario(ScenarioId::IJ);
  const ActionTable actions;
  const World w = make_world(cfg, 1);
  for (auto _ : state) benchmark::DoNotOptimize(observe(w, cfg, actions));
}
BENCHMARK(BM_Observe);

void BM_Mask(benchmark::State& state) {
  const World w = instantiate_scenario(ScenarioSpec::defaults(ScenarioId::LVEB));
  const ActionTable table;
  for (auto _ : state) benchmark::DoNotOptimize(mask_actions(w, 0, table, MaskConfig{}));
}
BENCHMARK(BM_Mask);

std::vector<AgentInput> inputs(int n) {
  Rng rng(2);
  std::vector<AgentInput> out;
  for (int i = 0; i < n; ++i) {
    AgentInput in{Eigen::VectorXd(22), Eigen::VectorXd(22)};
    for (int k = 0; k < 22; ++k) {
      in.self[k] = rng.uniform(-1, 1);
      in.mean[k] = rng.uniform(-1, 1);
    }
    out.push_back(in);
  }
  return out;
}

void BM_TaskForward(benchmark::State& state) {
  Rng rng(1);
  const auto models = PolicyModels::create(rng, 50.0);
  const auto batch = make_batch(inputs(static_cast<int>(state.range(0))));
  for (auto _ : state) benchmark::DoNotOptimize(models.task_net.forward(models.task.values, batch));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TaskForward)->Arg(1)->Arg(256);

void BM_TaskBackward(benchmark::State& state) {
  Rng rng(1);
  const auto models = PolicyModels::create(rng, 50.0);
  const auto batch = make_batch(inputs(static_cast<int>(state.range(0))));
  const auto out = models.task_net.forward(models.task.values, batch);
  const Eigen::MatrixXd dl = Eigen::MatrixXd::Ones(23, batch.size());
  const Eigen::RowVectorXd dv = Eigen::RowVectorXd::Ones(batch.size());
  std::vector<double> grad(models.task.values.size());
  for (auto _ : state) {
    models.task_net.backward(models.task.values, batch, out, dl, dv, grad);
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TaskBackward)->Arg(256);

void BM_ReplaySample(benchmark::State& state) {
  ReplayBuffer buf(static_cast<std::size_t>(state.range(0)));
  Rng rng(3);
  for (std::int64_t i = 0; i < state.range(0); ++i) {
    Transition t;
    const double r = rng.uniform(0.05, 1.0);
    t.risk = r;
    buf.push(std::move(t), r);
  }
  for (auto _ : state) benchmark::DoNotOptimize(buf.sample(256, rng));
}
BENCHMARK(BM_ReplaySample)->Arg(1000)->Arg(20000);

}  // namespace
BENCHMARK_MAIN();
