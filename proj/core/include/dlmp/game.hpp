#pragma once

#include "dlmp/devices.hpp"
#include "dlmp/exogenous.hpp"
#include "dlmp/netmodel.hpp"
#include "dlmp/policy.hpp"
#include "dlmp/powerflow.hpp"

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace dlmp {

/// Stage objective used for training:
///  EQ  potential phi on the true network (equilibrium policies),
///  SO  social welfare on the true network,
///  UN  potential on the zero-impedance copy (uniform LMP pricing).
enum class RewardMode { EQ, SO, UN };

std::string to_string(RewardMode mode);
RewardMode parse_reward_mode(const std::string& text);

struct GameState {
  StorageFleet fleet;
  ExoState exo;
};

struct StageOutcome {
  Eigen::VectorXd p;  // nodal loads, index k for node k + 1
  Eigen::VectorXd q;
  Eigen::VectorXd pbar;  // inelastic part
  Eigen::VectorXd qbar;
  Eigen::VectorXd p_storage;  // per agent, after projection
  Eigen::VectorXd q_storage;
  std::vector<Projection> projections;
  FlowSolution flows;
  PriceVector prices;
  Eigen::VectorXd utilities;  // u_i per agent
  Eigen::VectorXd rewards;    // U_i per agent
  double cost = 0.0;            // C
  double potential_cost = 0.0;  // C~
  double phi = 0.0;             // sum u - C~
  double welfare = 0.0;         // sum u - C
  bool zero_impedance = false;
};

/// The pricing game on a fixed network: one storage prosumer per load bus.
class Game {
 public:
  /// Agents are placed at every node with nonzero nominal load unless
  /// `agent_nodes` (node indices 1..|N|) is given.
  Game(Network net, ExoConfig exo, DeviceConfig devices, double w,
       std::shared_ptr<const Utility> utility = nullptr, std::optional<std::vector<int>> agent_nodes = std::nullopt);

  const Network& network() const { return net_; }
  const Sensitivities& sensitivities() const { return sens_; }
  const Sensitivities& zero_sensitivities() const { return zero_sens_; }
  /// Network that prices the given training objective.
  const Sensitivities& pricing_sensitivities(RewardMode mode) const;
  const ExoConfig& exo_config() const { return exo_; }
  const DeviceConfig& device_config() const { return devices_; }
  double w() const { return w_; }
  Game with_weight(double w) const;

  int n_nodes() const { return net_.node_count; }
  int n_agents() const { return static_cast<int>(agent_index_.size()); }
  /// Position in the nodal load vectors (node - 1) of each agent.
  const std::vector<int>& agent_index() const { return agent_index_; }
  const std::vector<StorageSpec>& specs() const { return specs_; }
  const std::vector<NodeLoad>& agent_nominal() const { return agent_nominal_; }
  const Utility& utility() const { return *utility_; }
  std::shared_ptr<const Utility> utility_ptr() const { return utility_; }
  ParamLayout layout() const { return ParamLayout{n_agents(), exo_.tau}; }

 private:
  Network net_;
  Sensitivities sens_;
  Sensitivities zero_sens_;
  ExoConfig exo_;
  DeviceConfig devices_;
  double w_;
  std::shared_ptr<const Utility> utility_;
  std::vector<int> agent_index_;
  std::vector<StorageSpec> specs_;
  std::vector<NodeLoad> agent_nominal_;
};

/// Projects the raw actions (n_agents x 2), forms the nodal loads, solves the
/// flows on `sens`, prices them and evaluates U_i, phi and the welfare.
StageOutcome stage(const Game& game, const GameState& state, const Eigen::MatrixXd& actions,
                   const Sensitivities& sens);

/// Next state: storage stepped with the projected set-points, exogenous state
/// advanced with `xi` (one entry per node including the root).
GameState transition(const Game& game, const GameState& state, const Eigen::MatrixXd& actions,
                     const Eigen::VectorXd& xi);

/// EQ -> phi, SO -> welfare, UN -> phi of the zero-impedance game. Throws
/// ArgumentError for UN when the outcome was priced on a lossy network.
double stage_objective(const StageOutcome& outcome, RewardMode mode);

/// Raw actions of every agent under `params` at `state`; eta rows per agent.
Eigen::MatrixXd joint_action(const PolicyParams& params, const Game& game, const GameState& state,
                             const Eigen::MatrixXd& eta, PolicyMode mode);

}  // namespace dlmp
