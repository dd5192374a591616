#include <benchmark/benchmark.h>

#include "v2xslice/drl.hpp"
#include "v2xslice/env.hpp"
#include "v2xslice/simulator.hpp"

using namespace v2xslice;

namespace {

Scenario with_vues(int n) {
  Scenario s = default_scenario();
  s.vue_count = n;
  return s;
}

void BM_SlotStep(benchmark::State& state) {
  const Scenario sc = with_vues(static_cast<int>(state.range(0)));
  Simulator sim(sc, 1);
  sim.begin_epoch(sc.action_space().at(0));
  Slot in_epoch = 0;
  for (auto _ : state) {
    sim.step_slot();
    if (++in_epoch == sc.epoch_slots) {
      sim.end_epoch();
      sim.begin_epoch(sc.action_space().at(0));
      in_epoch = 0;
    }
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_SlotStep)->Arg(25)->Arg(100)->Arg(400);

void BM_EnvironmentEpoch(benchmark::State& state) {
  Scenario sc = with_vues(static_cast<int>(state.range(0)));
  sc.episode_epochs = 1000000;
  Environment env(sc);
  env.reset(3);
  std::size_t a = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(env.step(a));
    a = (a + 7) % env.action_space().size();
  }
}
BENCHMARK(BM_EnvironmentEpoch)->Arg(24)->Arg(100)->Unit(benchmark::kMillisecond);

RecurrentNet bench_net(int units) {
  RecurrentNet net(actor_critic_config(4, 88, units, {64}));
  net.initialize(1);
  return net;
}

Mat bench_window(Eigen::Index k) { return Mat::Constant(k, 4, 0.3); }

void BM_LstmForward(benchmark::State& state) {
  const RecurrentNet net = bench_net(static_cast<int>(state.range(0)));
  const Mat x = bench_window(10);
  for (auto _ : state) benchmark::DoNotOptimize(net.forward(x));
}
BENCHMARK(BM_LstmForward)->Arg(16)->Arg(64)->Arg(256);

void BM_LstmBackward(benchmark::State& state) {
  const RecurrentNet net = bench_net(static_cast<int>(state.range(0)));
  const auto f = net.forward(bench_window(10));
  const std::vector<Vec> d{Vec::Constant(88, 0.01), Vec::Constant(1, 1.0)};
  Vec g = Vec::Zero(net.params().values.size());
  for (auto _ : state) {
    net.backward(f, d, g);
    benchmark::DoNotOptimize(g.data());
  }
}
BENCHMARK(BM_LstmBackward)->Arg(16)->Arg(64)->Arg(256);

}  // namespace

BENCHMARK_MAIN();
