#include "dlmp/errors.hpp"
#include "dlmp/gradient.hpp"
#include "dlmp/trainer.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace dlmp;

namespace {

ExoConfig short_memory() {
  ExoConfig cfg;
  cfg.tau = 2;
  return cfg;
}

PolicyParams random_params(const Game& game, Rng& rng, double scale) {
  auto params = init_params(game.n_agents(), game.exo_config().tau);
  std::normal_distribution<double> normal(0.0, scale);
  for (auto& x : params.theta) x = normal(rng);
  return params;
}

// Smallest distance of any raw action on the tape to a projection kink.
double kink_distance(const Game& game, const RolloutTape& tape) {
  double best = 1e300;
  for (const auto& st : tape.steps) {
    for (int i = 0; i < game.n_agents(); ++i) {
      const auto& spec = game.specs()[i];
      const double d = st.state.fleet.d(i);
      const double ap = st.actions(i, 0), aq = st.actions(i, 1);
      best = std::min({best, std::abs(ap + d), std::abs(ap - (spec.d_max - d))});
      const double c = std::clamp(ap, -d, spec.d_max - d);
      best = std::min(best, std::abs(std::hypot(c, aq) - spec.b));
    }
  }
  return best;
}

double value_at(const Game& game, PolicyParams params, const Eigen::VectorXd& theta, const GameState& s0,
                int horizon, const NoiseStreams& noise, RewardMode mode, PolicyMode pm) {
  params.theta = theta;
  return rollout_value(game, params, s0, horizon, noise, mode, pm).value;
}

}  // namespace

TEST(Gradient, MatchesCentralDifferences) {
  Rng rng(11);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const RewardMode modes[] = {RewardMode::EQ, RewardMode::SO, RewardMode::UN};
  constexpr double kStep = 1e-5;
  int accepted = 0, rejected = 0;
  double worst = 0.0;
  while (accepted < 120) {
    const int n = 1 + accepted % 4;
    const int horizon = static_cast<int>(unit(rng) * 11) % 11;
    const RewardMode mode = modes[accepted % 3];
    const PolicyMode pm = accepted % 2 ? PolicyMode::Stochastic : PolicyMode::Deterministic;
    const Game game(test::random_tree(n, rng, 3.0), short_memory(), DeviceConfig{}, unit(rng));
    const auto params = random_params(game, rng, 0.3);
    const auto s0 = sample_initial_state(game, rng);
    const auto noise = sample_streams(game, horizon, rng);
    const auto run = rollout_value(game, params, s0, horizon, noise, mode, pm);
    if (kink_distance(game, run.tape) < 1e-6) {
      ++rejected;
      continue;
    }
    const auto g = backward(game, run.tape, params).grad;
    Eigen::VectorXd fd(params.theta.size());
    for (Eigen::Index j = 0; j < fd.size(); ++j) {
      Eigen::VectorXd up = params.theta, down = params.theta;
      up(j) += kStep;
      down(j) -= kStep;
      fd(j) = (value_at(game, params, up, s0, horizon, noise, mode, pm) -
               value_at(game, params, down, s0, horizon, noise, mode, pm)) /
              (2 * kStep);
    }
    worst = std::max(worst, (g - fd).norm() / std::max(1.0, fd.norm()));
    ++accepted;
  }
  EXPECT_LE(worst, 1e-4);
  EXPECT_LT(rejected, accepted);
}

TEST(Gradient, ZeroHorizonValueIsFirstStage) {
  const Game game(test::case18_tripled(), ExoConfig{}, DeviceConfig{}, 0.75);
  Rng rng(12);
  const auto params = random_params(game, rng, 0.05);
  const auto s0 = sample_initial_state(game, rng);
  const auto noise = sample_streams(game, 0, rng);
  const auto run = rollout_value(game, params, s0, 0, noise, RewardMode::SO);
  const auto a = joint_action(params, game, s0, noise.eta[0], PolicyMode::Stochastic);
  const auto out = stage(game, s0, a, game.sensitivities());
  EXPECT_EQ(run.value, out.welfare);
  EXPECT_EQ(run.tape.steps.size(), 1u);
}

TEST(Gradient, ErrorsAndDeterminism) {
  const Game game(test::case18_tripled(), ExoConfig{}, DeviceConfig{}, 0.75);
  Rng rng(13);
  const auto params = random_params(game, rng, 0.05);
  const auto s0 = sample_initial_state(game, rng);
  const auto noise = sample_streams(game, 5, rng);
  EXPECT_THROW(rollout_value(game, params, s0, 6, noise, RewardMode::EQ), ArgumentError);
  EXPECT_THROW(rollout_value(game, params, s0, -1, noise, RewardMode::EQ), ArgumentError);

  const auto a = rollout_value(game, params, s0, 5, noise, RewardMode::EQ);
  const auto b = rollout_value(game, params, s0, 5, noise, RewardMode::EQ);
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(backward(game, a.tape, params).grad, backward(game, b.tape, params).grad);

  auto other = params;
  other.theta(0) += 1.0;
  EXPECT_THROW(backward(game, a.tape, other), ArgumentError);
  EXPECT_THROW(backward(game, a.tape, init_params(3, 3)), ArgumentError);
  EXPECT_THROW(sample_horizon(1.0, rng), ArgumentError);
}

TEST(Horizon, GeometricMean) {
  Rng rng(14);
  constexpr int kDraws = 100000;
  double sum = 0.0;
  int zeros = 0;
  for (int k = 0; k < kDraws; ++k) {
    const int h = sample_horizon(0.99, rng);
    ASSERT_GE(h, 0);
    sum += h;
    zeros += h == 0;
  }
  EXPECT_NEAR(sum / kDraws, 99.0, 3.0);
  EXPECT_NEAR(static_cast<double>(zeros) / kDraws, 0.01, 0.002);
}

// Averaging Phi-hat over H ~ Geometric(1 - gamma) recovers the discounted sum,
// for the value and for the gradient.
TEST(Gradient, GeometricHorizonIsUnbiased) {
  Rng rng(16);
  const Game game(test::random_tree(3, rng, 3.0), short_memory(), DeviceConfig{}, 0.6);
  const double gamma = 0.6;
  const int T = 80;  // gamma^T ~ 1e-18
  const auto params = random_params(game, rng, 0.3);
  const auto s0 = sample_initial_state(game, rng);
  const auto noise = sample_streams(game, T, rng);

  auto discounted = [&](const Eigen::VectorXd& theta) {
    auto p = params;
    p.theta = theta;
    const auto run = rollout_value(game, p, s0, T, noise, RewardMode::EQ);
    double total = 0.0, weight = 1.0;
    for (const auto& st : run.tape.steps) {
      total += weight * st.objective;
      weight *= gamma;
    }
    return total;
  };

  double mixed_value = 0.0;
  Eigen::VectorXd mixed_grad = Eigen::VectorXd::Zero(params.theta.size());
  for (int h = 0; h <= T; ++h) {
    const double prob = (1 - gamma) * std::pow(gamma, h);
    const auto run = rollout_value(game, params, s0, h, noise, RewardMode::EQ);
    mixed_value += prob * run.value;
    mixed_grad += prob * backward(game, run.tape, params).grad;
  }
  EXPECT_NEAR(mixed_value, discounted(params.theta), 1e-9 * std::max(1.0, std::abs(mixed_value)));

  constexpr double kStep = 1e-5;
  Eigen::VectorXd fd(params.theta.size());
  for (Eigen::Index j = 0; j < fd.size(); ++j) {
    Eigen::VectorXd up = params.theta, down = params.theta;
    up(j) += kStep;
    down(j) -= kStep;
    fd(j) = (discounted(up) - discounted(down)) / (2 * kStep);
  }
  EXPECT_LE((mixed_grad - fd).norm() / std::max(1.0, fd.norm()), 1e-4);
}

TEST(Gradient, LoadGradientMatchesDifferences) {
  Rng rng(17);
  const Game game(test::random_tree(4, rng, 3.0), short_memory(), DeviceConfig{}, 0.5);
  const Eigen::VectorXd p = test::random_vector(4, rng, 0.0, 2.0), q = test::random_vector(4, rng, 0.0, 1.0);
  const double lambda = 1.3, h = 1e-6;
  for (auto mode : {RewardMode::EQ, RewardMode::SO, RewardMode::UN}) {
    const auto g = objective_load_gradient(game, p, q, lambda, mode);
    // Objectives without utilities: EQ -> -C~, SO -> -C, UN -> -C~ on zero impedance.
    auto f = [&](const Eigen::VectorXd& pp, const Eigen::VectorXd& qq) {
      const auto& s = game.pricing_sensitivities(mode);
      if (mode == RewardMode::SO) return -dso_cost(solve(s, pp, qq, s.v0), pp, lambda, game.w(), s.v0);
      return -potential_cost(pp, qq, lambda, game.w(), s);
    };
    for (int k = 0; k < 4; ++k) {
      Eigen::VectorXd up = p, down = p;
      up(k) += h;
      down(k) -= h;
      EXPECT_NEAR(g.dp(k), (f(up, q) - f(down, q)) / (2 * h), 1e-6);
      up = q;
      down = q;
      up(k) += h;
      down(k) -= h;
      EXPECT_NEAR(g.dq(k), (f(p, up) - f(p, down)) / (2 * h), 1e-6);
    }
  }
}
