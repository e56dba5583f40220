#include "dlmp/game.hpp"

#include "dlmp/errors.hpp"

#include <algorithm>

namespace dlmp {

std::string to_string(RewardMode mode) {
  switch (mode) {
    case RewardMode::EQ: return "EQ";
    case RewardMode::SO: return "SO";
    case RewardMode::UN: return "UN";
  }
  return "?";
}

RewardMode parse_reward_mode(const std::string& text) {
  std::string upper = text;
  std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) { return std::toupper(c); });
  if (upper == "EQ") return RewardMode::EQ;
  if (upper == "SO") return RewardMode::SO;
  if (upper == "UN") return RewardMode::UN;
  throw ArgumentError("unknown reward mode '" + text + "' (expected EQ, SO or UN)");
}

Game::Game(Network net, ExoConfig exo, DeviceConfig devices, double w, std::shared_ptr<const Utility> utility,
           std::optional<std::vector<int>> agent_nodes)
    : net_(std::move(net)), exo_(exo), devices_(devices), w_(w), utility_(std::move(utility)) {
  if (!(w_ >= 0.0 && w_ <= 1.0)) throw ArgumentError("voltage weight w must lie in [0, 1]");
  exo_.validate();
  sens_ = build_sensitivities(net_);
  zero_sens_ = build_sensitivities(net_.without_impedance());
  if (!utility_) utility_ = std::make_shared<ZeroUtility>();

  if (agent_nodes) {
    for (int node : *agent_nodes) {
      if (node < 1 || node > net_.node_count) throw ArgumentError("agent node out of range");
      agent_index_.push_back(node - 1);
    }
  } else {
    for (int k = 0; k < net_.node_count; ++k) {
      const auto& load = net_.nominal_load[k];
      if (load.p != 0.0 || load.q != 0.0) agent_index_.push_back(k);
    }
  }
  if (agent_index_.empty()) throw ArgumentError("network has no load buses to host prosumers");
  for (int k : agent_index_) {
    agent_nominal_.push_back(net_.nominal_load[k]);
    specs_.push_back(size_storage(net_.nominal_load[k], devices_));
  }
}

const Sensitivities& Game::pricing_sensitivities(RewardMode mode) const {
  return mode == RewardMode::UN ? zero_sens_ : sens_;
}

Game Game::with_weight(double w) const {
  if (!(w >= 0.0 && w <= 1.0)) throw ArgumentError("voltage weight w must lie in [0, 1]");
  Game copy = *this;
  copy.w_ = w;
  return copy;
}

StageOutcome stage(const Game& game, const GameState& state, const Eigen::MatrixXd& actions,
                   const Sensitivities& sens) {
  const int n_agents = game.n_agents();
  if (actions.rows() != n_agents || actions.cols() != 2) throw ArgumentError("actions must be n_agents x 2");
  if (state.fleet.d.size() != n_agents) throw ArgumentError("fleet size does not match the agent count");
  if (sens.node_count() != game.n_nodes()) throw ArgumentError("sensitivities do not match the network");

  StageOutcome out;
  const auto exo = measure(state.exo, game.exo_config(), game.network().nominal_load);
  out.pbar = exo.pbar;
  out.qbar = exo.qbar;
  out.p = exo.pbar;
  out.q = exo.qbar;
  out.p_storage.resize(n_agents);
  out.q_storage.resize(n_agents);
  out.utilities.resize(n_agents);
  out.projections.reserve(n_agents);
  const auto& utility = game.utility();
  for (int i = 0; i < n_agents; ++i) {
    const auto proj = project(actions(i, 0), actions(i, 1), state.fleet.d(i), game.specs()[i]);
    out.p_storage(i) = proj.p;
    out.q_storage(i) = proj.q;
    const int k = game.agent_index()[i];
    out.p(k) += proj.p;
    out.q(k) += proj.q;
    out.utilities(i) = utility.value(static_cast<std::size_t>(i), state.fleet.d(i), proj.p, proj.q);
    out.projections.push_back(proj);
  }

  const double w = game.w();
  out.flows = solve(sens, out.p, out.q, sens.v0);
  out.prices = nodal_prices(sens, out.p, out.q, exo.lambda, w, sens.v0);
  out.cost = dso_cost(out.flows, out.p, exo.lambda, w, sens.v0);
  out.potential_cost = potential_cost(out.p, out.q, exo.lambda, w, sens);
  out.rewards.resize(n_agents);
  for (int i = 0; i < n_agents; ++i) {
    const int k = game.agent_index()[i];
    out.rewards(i) = out.utilities(i) - out.p(k) * out.prices.mu_p(k) - out.q(k) * out.prices.mu_q(k);
  }
  const double total_utility = out.utilities.sum();
  out.phi = total_utility - out.potential_cost;
  out.welfare = total_utility - out.cost;
  out.zero_impedance = sens.r.isZero(0.0) && sens.x.isZero(0.0);
  return out;
}

GameState transition(const Game& game, const GameState& state, const Eigen::MatrixXd& actions,
                     const Eigen::VectorXd& xi) {
  const int n_agents = game.n_agents();
  if (actions.rows() != n_agents || actions.cols() != 2) throw ArgumentError("actions must be n_agents x 2");
  GameState next;
  next.fleet.specs = state.fleet.specs;
  next.fleet.d.resize(n_agents);
  for (int i = 0; i < n_agents; ++i) {
    const auto& spec = game.specs()[i];
    const auto proj = project(actions(i, 0), actions(i, 1), state.fleet.d(i), spec);
    next.fleet.d(i) = step_soc(state.fleet.d(i), proj.p, spec);
  }
  next.exo = step(state.exo, xi, game.exo_config());
  return next;
}

double stage_objective(const StageOutcome& outcome, RewardMode mode) {
  // EQ and SO accept a genuinely lossless network, UN never accepts a lossy one.
  if (mode == RewardMode::UN && !outcome.zero_impedance) {
    throw ArgumentError("UN objective needs an outcome priced on the zero-impedance network");
  }
  return mode == RewardMode::SO ? outcome.welfare : outcome.phi;
}

Eigen::MatrixXd joint_action(const PolicyParams& params, const Game& game, const GameState& state,
                             const Eigen::MatrixXd& eta, PolicyMode mode) {
  const int n_agents = game.n_agents();
  if (params.layout != game.layout()) throw ArgumentError("policy layout does not match the game");
  if (mode == PolicyMode::Stochastic && (eta.rows() != n_agents || eta.cols() != 2)) {
    throw ArgumentError("policy noise must be n_agents x 2");
  }
  Eigen::MatrixXd actions(n_agents, 2);
  const Eigen::VectorXd alpha_0 = state.exo.alpha.row(0).transpose();
  for (int i = 0; i < n_agents; ++i) {
    const Eigen::VectorXd alpha_i = state.exo.alpha.row(game.agent_index()[i] + 1).transpose();
    const Eigen::Vector2d noise = mode == PolicyMode::Stochastic ? Eigen::Vector2d(eta.row(i).transpose())
                                                                 : Eigen::Vector2d::Zero();
    actions.row(i) = act(params, i, state.fleet.d(i), alpha_i, alpha_0, noise, mode).transpose();
  }
  return actions;
}

}  // namespace dlmp
