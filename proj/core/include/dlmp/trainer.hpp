#pragma once

#include "dlmp/game.hpp"
#include "dlmp/gradient.hpp"
#include "dlmp/policy.hpp"
#include "dlmp/random.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace dlmp {

struct TrainConfig {
  double gamma = 0.99;
  double beta = 0.001;
  int n_train = 500;
  int n_batch = 1;
  RewardMode mode = RewardMode::EQ;
  double w = 0.75;
  std::uint64_t seed = 0;
  int threads = 1;  // batch members evaluated concurrently; reduction order is fixed

  void validate() const;
};

struct TrainRecord {
  int iteration = 0;
  double value = 0.0;  // batch mean of Phi-hat
  double grad_norm = 0.0;
  double theta_norm = 0.0;
  int horizon = 0;  // mean sampled horizon across the batch, rounded down
};

struct TrainLog {
  std::vector<TrainRecord> records;
  Eigen::VectorXd final_theta;

  /// Mean of `value` over the last `window` iterations.
  double moving_average(int window) const;
};

struct TrainResult {
  PolicyParams params;
  TrainLog log;
};

/// d_i ~ U(0, d_max_i) independently; exogenous state from sample_initial.
GameState sample_initial_state(const Game& game, Rng& rng);

/// Stochastic gradient ascent on the estimated value of the mode's stage
/// objective, starting from theta = 0. Member b of iteration k draws all of its
/// randomness from substream (seed, k, b). Throws TrainingError on a
/// non-finite gradient. `progress` is called after every iteration.
TrainResult train(const Game& game, const TrainConfig& cfg,
                  const std::function<void(const TrainRecord&)>& progress = {});

}  // namespace dlmp
