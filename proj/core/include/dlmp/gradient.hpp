#pragma once

#include "dlmp/game.hpp"
#include "dlmp/policy.hpp"
#include "dlmp/random.hpp"

#include <Eigen/Dense>

#include <vector>

namespace dlmp {

/// Pre-drawn randomness for one reparameterized rollout. `xi[t]` drives the
/// exogenous transition out of stage t, `eta[t]` the policy noise at stage t.
struct NoiseStreams {
  std::vector<Eigen::VectorXd> xi;
  std::vector<Eigen::MatrixXd> eta;
};

/// Draws streams covering stages 0..horizon (horizon transitions).
NoiseStreams sample_streams(const Game& game, int horizon, Rng& rng);

struct TapeStep {
  GameState state;
  Eigen::MatrixXd actions;  // raw, before projection
  std::vector<Projection> projections;
  Eigen::VectorXd p;  // nodal loads
  Eigen::VectorXd q;
  double lambda = 0.0;
  double objective = 0.0;
};

struct RolloutTape {
  std::vector<TapeStep> steps;  // H + 1 entries
  int horizon = 0;
  RewardMode mode = RewardMode::EQ;
  PolicyMode policy_mode = PolicyMode::Stochastic;
  Eigen::VectorXd theta;  // parameters the tape was recorded with
  NoiseStreams noise;
};

struct GradEstimate {
  Eigen::VectorXd grad;
  double value = 0.0;
};

struct RolloutResult {
  double value = 0.0;
  RolloutTape tape;
};

/// Phi-hat = sum_{t=0}^{H} objective_t along the reparameterized trajectory.
RolloutResult rollout_value(const Game& game, const PolicyParams& params, const GameState& s0, int horizon,
                            const NoiseStreams& noise, RewardMode mode,
                            PolicyMode policy_mode = PolicyMode::Stochastic);

/// Exact reverse-mode gradient of the taped Phi-hat with respect to theta,
/// through the policy, projection, storage recursion and grid quadratics.
GradEstimate backward(const Game& game, const RolloutTape& tape, const PolicyParams& params);

/// Gradient of the stage objective with respect to the nodal loads.
LoadGradient objective_load_gradient(const Game& game, const Eigen::VectorXd& p, const Eigen::VectorXd& q,
                                     double lambda, RewardMode mode);

/// H ~ Geometric(1 - gamma) on {0, 1, 2, ...}: P(H = h) = (1 - gamma) gamma^h.
int sample_horizon(double gamma, Rng& rng);

}  // namespace dlmp
