#include "dlmp/trainer.hpp"

#include "dlmp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <future>

namespace dlmp {

void TrainConfig::validate() const {
  if (!(gamma > 0.0 && gamma < 1.0)) throw ArgumentError("train.gamma must lie in (0, 1)");
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw ArgumentError("train.beta must be nonnegative");
  if (n_train < 1) throw ArgumentError("train.n_train must be at least 1");
  if (n_batch < 1) throw ArgumentError("train.n_batch must be at least 1");
  if (!(w >= 0.0 && w <= 1.0)) throw ArgumentError("train.w must lie in [0, 1]");
  if (threads < 1) throw ArgumentError("threads must be at least 1");
}

double TrainLog::moving_average(int window) const {
  if (records.empty()) return 0.0;
  const auto n = std::min<std::size_t>(records.size(), static_cast<std::size_t>(std::max(window, 1)));
  double sum = 0.0;
  for (auto it = records.end() - static_cast<std::ptrdiff_t>(n); it != records.end(); ++it) sum += it->value;
  return sum / static_cast<double>(n);
}

GameState sample_initial_state(const Game& game, Rng& rng) {
  GameState state;
  state.fleet.specs = game.specs();
  state.fleet.d.resize(game.n_agents());
  for (int i = 0; i < game.n_agents(); ++i) {
    std::uniform_real_distribution<double> soc(0.0, game.specs()[i].d_max);
    state.fleet.d(i) = soc(rng);
  }
  state.exo = sample_initial(game.exo_config(), game.n_nodes() + 1, rng);
  return state;
}

namespace {

struct MemberResult {
  GradEstimate estimate;
  int horizon = 0;
};

MemberResult run_member(const Game& game, const PolicyParams& params, const TrainConfig& cfg, int iteration,
                        int member) {
  auto rng = substream(cfg.seed, StreamTag::Train,
                       {static_cast<std::uint64_t>(iteration), static_cast<std::uint64_t>(member)});
  const auto s0 = sample_initial_state(game, rng);
  const int horizon = sample_horizon(cfg.gamma, rng);
  const auto noise = sample_streams(game, horizon, rng);
  const auto rollout = rollout_value(game, params, s0, horizon, noise, cfg.mode, PolicyMode::Stochastic);
  return {backward(game, rollout.tape, params), horizon};
}

}  // namespace

TrainResult train(const Game& base_game, const TrainConfig& cfg,
                  const std::function<void(const TrainRecord&)>& progress) {
  cfg.validate();
  const Game game = base_game.with_weight(cfg.w);
  TrainResult result;
  result.params = init_params(game.n_agents(), game.exo_config().tau);
  auto& params = result.params;
  result.log.records.reserve(cfg.n_train);

  for (int iteration = 0; iteration < cfg.n_train; ++iteration) {
    std::vector<MemberResult> members(cfg.n_batch);
    if (cfg.threads > 1 && cfg.n_batch > 1) {
      for (int start = 0; start < cfg.n_batch; start += cfg.threads) {
        const int stop = std::min(cfg.n_batch, start + cfg.threads);
        std::vector<std::future<MemberResult>> pending;
        for (int b = start; b < stop; ++b) {
          pending.push_back(std::async(std::launch::async, run_member, std::cref(game), std::cref(params),
                                       std::cref(cfg), iteration, b));
        }
        for (int b = start; b < stop; ++b) members[b] = pending[b - start].get();
      }
    } else {
      for (int b = 0; b < cfg.n_batch; ++b) members[b] = run_member(game, params, cfg, iteration, b);
    }

    // Ordered reduction keeps results independent of thread scheduling.
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(params.theta.size());
    double value = 0.0;
    long horizon_sum = 0;
    for (const auto& m : members) {
      grad += m.estimate.grad / static_cast<double>(cfg.n_batch);
      value += m.estimate.value / static_cast<double>(cfg.n_batch);
      horizon_sum += m.horizon;
    }
    if (!grad.allFinite() || !std::isfinite(value)) {
      throw TrainingError("non-finite gradient at iteration " + std::to_string(iteration), iteration);
    }
    params.theta += cfg.beta * grad;

    TrainRecord record{iteration, value, grad.norm(), params.theta.norm(),
                       static_cast<int>(horizon_sum / cfg.n_batch)};
    result.log.records.push_back(record);
    if (progress) progress(record);
  }
  result.log.final_theta = params.theta;
  return result;
}

}  // namespace dlmp
