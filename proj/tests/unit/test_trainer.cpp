#include "dlmp/errors.hpp"
#include "dlmp/trainer.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

using namespace dlmp;

TEST(Trainer, ZeroStepKeepsThetaAtZero) {
  const Game game(test::case18_tripled(), ExoConfig{}, DeviceConfig{}, 0.75);
  TrainConfig cfg;
  cfg.n_train = 1;
  cfg.beta = 0.0;
  const auto result = train(game, cfg);
  EXPECT_EQ(result.params.theta.norm(), 0.0);
  ASSERT_EQ(result.log.records.size(), 1u);
  EXPECT_GT(result.log.records[0].grad_norm, 0.0);
}

TEST(Trainer, SameSeedSameLog) {
  const Game game(test::two_series(), ExoConfig{}, DeviceConfig{}, 0.5);
  TrainConfig cfg;
  cfg.n_train = 20;
  cfg.n_batch = 3;
  cfg.seed = 42;
  const auto a = train(game, cfg);
  cfg.threads = 3;
  const auto b = train(game, cfg);
  ASSERT_EQ(a.log.records.size(), b.log.records.size());
  for (std::size_t k = 0; k < a.log.records.size(); ++k) {
    EXPECT_EQ(a.log.records[k].value, b.log.records[k].value);
    EXPECT_EQ(a.log.records[k].grad_norm, b.log.records[k].grad_norm);
    EXPECT_EQ(a.log.records[k].horizon, b.log.records[k].horizon);
  }
  EXPECT_EQ(a.params.theta, b.params.theta);
  EXPECT_EQ(a.log.final_theta, a.params.theta);

  cfg.seed = 43;
  EXPECT_NE(train(game, cfg).params.theta, a.params.theta);
}

TEST(Trainer, InitialChargeUniformOnCapacity) {
  const Game game(test::single_line(), ExoConfig{}, DeviceConfig{}, 0.5);
  ASSERT_DOUBLE_EQ(game.specs()[0].d_max, 6.0);
  Rng rng(3);
  double sum = 0.0;
  constexpr int kDraws = 20000;
  for (int k = 0; k < kDraws; ++k) {
    const double d = sample_initial_state(game, rng).fleet.d(0);
    ASSERT_GE(d, 0.0);
    ASSERT_LE(d, 6.0);
    sum += d;
  }
  EXPECT_NEAR(sum / kDraws, 3.0, 0.1);
}

TEST(Trainer, ConfigValidation) {
  const Game game(test::single_line(), ExoConfig{}, DeviceConfig{}, 0.5);
  TrainConfig cfg;
  cfg.gamma = 1.0;
  EXPECT_THROW(train(game, cfg), ArgumentError);
  cfg = TrainConfig{};
  cfg.n_batch = 0;
  EXPECT_THROW(train(game, cfg), ArgumentError);
  cfg = TrainConfig{};
  cfg.w = 2.0;
  EXPECT_THROW(train(game, cfg), ArgumentError);
}

TEST(Trainer, MovingAverage) {
  TrainLog log;
  for (int k = 0; k < 10; ++k) log.records.push_back({k, static_cast<double>(k)});
  EXPECT_DOUBLE_EQ(log.moving_average(4), 7.5);
  EXPECT_DOUBLE_EQ(log.moving_average(100), 4.5);
}

// Training on the potential raises the expected potential over common streams.
TEST(Trainer, ImprovesTrainingObjective) {
  const Game game(test::case18_tripled(), ExoConfig{}, DeviceConfig{}, 0.75);
  TrainConfig cfg;
  cfg.n_train = 300;
  cfg.seed = 5;
  const auto trained = train(game, cfg).params;
  const auto idle = init_params(game.n_agents(), game.exo_config().tau);
  double gain = 0.0;
  constexpr int kRollouts = 40;
  for (int k = 0; k < kRollouts; ++k) {
    Rng rng(1000 + k);
    const auto s0 = sample_initial_state(game, rng);
    const auto noise = sample_streams(game, 100, rng);
    gain += rollout_value(game, trained, s0, 100, noise, RewardMode::EQ, PolicyMode::Deterministic).value -
            rollout_value(game, idle, s0, 100, noise, RewardMode::EQ, PolicyMode::Deterministic).value;
  }
  EXPECT_GT(gain / kRollouts, 0.0);
}
