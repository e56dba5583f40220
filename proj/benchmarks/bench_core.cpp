#include "dlmp/game.hpp"
#include "dlmp/gradient.hpp"
#include "dlmp/netmodel.hpp"
#include "dlmp/trainer.hpp"

#include <benchmark/benchmark.h>

#include <string>

using namespace dlmp;

namespace {

Network case18() { return scale_loads(load_case_file(std::string(DLMP_BENCH_DATA_DIR) + "/case18.m"), 3.0); }

const Game& game() {
  static const Game g(case18(), ExoConfig{}, DeviceConfig{}, 0.75);
  return g;
}

PolicyParams small_policy(Rng& rng) {
  auto params = init_params(game().n_agents(), game().exo_config().tau);
  std::normal_distribution<double> normal(0.0, 0.02);
  for (auto& x : params.theta) x = normal(rng);
  return params;
}

}  // namespace

void BM_Sensitivities(benchmark::State& state) {
  const auto net = case18();
  for (auto _ : state) benchmark::DoNotOptimize(build_sensitivities(net));
}
BENCHMARK(BM_Sensitivities);

void BM_Stage(benchmark::State& state) {
  Rng rng(1);
  const auto s = sample_initial_state(game(), rng);
  const Eigen::MatrixXd a = Eigen::MatrixXd::Constant(game().n_agents(), 2, 0.05);
  for (auto _ : state) benchmark::DoNotOptimize(stage(game(), s, a, game().sensitivities()));
}
BENCHMARK(BM_Stage);

void BM_RolloutBackward(benchmark::State& state) {
  const int horizon = static_cast<int>(state.range(0));
  Rng rng(2);
  const auto params = small_policy(rng);
  const auto s0 = sample_initial_state(game(), rng);
  const auto noise = sample_streams(game(), horizon, rng);
  for (auto _ : state) {
    const auto run = rollout_value(game(), params, s0, horizon, noise, RewardMode::EQ);
    benchmark::DoNotOptimize(backward(game(), run.tape, params));
  }
  state.SetItemsProcessed(state.iterations() * (horizon + 1));
}
BENCHMARK(BM_RolloutBackward)->Arg(10)->Arg(100)->Arg(500);
BENCHMARK_MAIN();
