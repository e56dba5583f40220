#include "dlmp/gradient.hpp"

#include "dlmp/errors.hpp"

#include <cmath>
#include <limits>

namespace dlmp {

NoiseStreams sample_streams(const Game& game, int horizon, Rng& rng) {
  if (horizon < 0) throw ArgumentError("horizon must be nonnegative");
  NoiseStreams noise;
  noise.xi.reserve(horizon);
  noise.eta.reserve(horizon + 1);
  for (int t = 0; t <= horizon; ++t) {
    noise.eta.push_back(sample_policy_noise(game.agent_nominal(), rng));
    if (t < horizon) noise.xi.push_back(sample_noise(game.exo_config(), game.n_nodes() + 1, rng));
  }
  return noise;
}

LoadGradient objective_load_gradient(const Game& game, const Eigen::VectorXd& p, const Eigen::VectorXd& q,
                                     double lambda, RewardMode mode) {
  const auto& sens = game.pricing_sensitivities(mode);
  LoadGradient g;
  if (mode == RewardMode::SO) {
    auto prices = nodal_prices(sens, p, q, lambda, game.w(), sens.v0);
    g.dp = -prices.mu_p;
    g.dq = -prices.mu_q;
  } else {
    g = potential_cost_gradient(sens, p, q, lambda, game.w());
    g.dp = -g.dp;
    g.dq = -g.dq;
  }
  return g;
}

RolloutResult rollout_value(const Game& game, const PolicyParams& params, const GameState& s0, int horizon,
                            const NoiseStreams& noise, RewardMode mode, PolicyMode policy_mode) {
  if (horizon < 0) throw ArgumentError("horizon must be nonnegative");
  if (static_cast<int>(noise.xi.size()) < horizon ||
      (policy_mode == PolicyMode::Stochastic && static_cast<int>(noise.eta.size()) < horizon + 1)) {
    throw ArgumentError("noise streams exhausted: horizon " + std::to_string(horizon) + " needs " +
                        std::to_string(horizon) + " xi and " + std::to_string(horizon + 1) + " eta draws");
  }
  const auto& sens = game.pricing_sensitivities(mode);
  const Eigen::MatrixXd no_noise = Eigen::MatrixXd::Zero(game.n_agents(), 2);

  RolloutResult result;
  auto& tape = result.tape;
  tape.horizon = horizon;
  tape.mode = mode;
  tape.policy_mode = policy_mode;
  tape.theta = params.theta;
  tape.noise = noise;
  tape.steps.reserve(horizon + 1);

  GameState state = s0;
  for (int t = 0; t <= horizon; ++t) {
    const auto& eta = policy_mode == PolicyMode::Stochastic ? noise.eta[t] : no_noise;
    TapeStep step;
    step.actions = joint_action(params, game, state, eta, policy_mode);
    const auto outcome = stage(game, state, step.actions, sens);
    step.state = state;
    step.projections = outcome.projections;
    step.p = outcome.p;
    step.q = outcome.q;
    step.lambda = outcome.prices.lambda;
    step.objective = stage_objective(outcome, mode);
    result.value += step.objective;
    if (t < horizon) state = transition(game, state, step.actions, noise.xi[t]);
    tape.steps.push_back(std::move(step));
  }
  return result;
}

GradEstimate backward(const Game& game, const RolloutTape& tape, const PolicyParams& params) {
  if (params.layout != game.layout()) throw ArgumentError("policy layout does not match the game");
  if (tape.theta.size() != params.theta.size() || tape.theta != params.theta) {
    throw ArgumentError("tape was recorded with different parameters");
  }
  if (static_cast<int>(tape.steps.size()) != tape.horizon + 1) throw ArgumentError("tape is incomplete");

  const int n_agents = game.n_agents();
  const auto& layout = params.layout;
  const int k = layout.state_dim();
  const auto& utility = game.utility();
  const bool has_utility = !utility.is_zero();

  GradEstimate out;
  out.grad = Eigen::VectorXd::Zero(params.theta.size());
  // Adjoint of the state of charge entering the stage after the current one.
  Eigen::VectorXd soc_adjoint = Eigen::VectorXd::Zero(n_agents);

  for (int t = tape.horizon; t >= 0; --t) {
    const auto& step = tape.steps[t];
    out.value += step.objective;
    const auto load_grad = objective_load_gradient(game, step.p, step.q, step.lambda, tape.mode);
    const Eigen::VectorXd alpha_0 = step.state.exo.alpha.row(0).transpose();

    for (int i = 0; i < n_agents; ++i) {
      const int node = game.agent_index()[i];
      const auto& proj = step.projections[i];
      const double soc = step.state.fleet.d(i);

      // d^{t+1} = d^t + p~, so the next-stage adjoint flows into p~ and d^t alike.
      Eigen::Vector2d g_set(load_grad.dp(node) + soc_adjoint(i), load_grad.dq(node));
      double g_soc = soc_adjoint(i);
      if (has_utility) {
        const auto du = utility.gradient(static_cast<std::size_t>(i), soc, proj.p, proj.q);
        g_soc += du[0];
        g_set(0) += du[1];
        g_set(1) += du[2];
      }

      const Eigen::Vector2d g_action = proj.d_action.transpose() * g_set;
      g_soc += proj.d_soc.dot(g_set);

      const auto alpha_i = step.state.exo.alpha.row(node + 1);
      out.grad.segment<2>(layout.soc_block(i)) += g_action * soc;
      for (int row = 0; row < 2; ++row) {
        out.grad.segment(layout.local_block(i) + row * k, k) += g_action(row) * alpha_i.transpose();
        out.grad.segment(layout.root_block(i) + row * k, k) += g_action(row) * alpha_0;
      }
      out.grad.segment<2>(layout.bias_block(i)) += g_action;
      g_soc += params.theta.segment<2>(layout.soc_block(i)).dot(g_action);

      soc_adjoint(i) = g_soc;
    }
  }
  return out;
}

int sample_horizon(double gamma, Rng& rng) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw ArgumentError("gamma must lie in (0, 1)");
  std::geometric_distribution<int> geometric(1.0 - gamma);
  return geometric(rng);
}

}  // namespace dlmp
