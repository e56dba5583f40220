#pragma once

#include "dlmp/netmodel.hpp"
#include "dlmp/random.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <string>

namespace dlmp {

enum class PolicyMode { Stochastic, Deterministic };

/// Offsets of one agent's blocks inside the flat parameter vector. Each agent
/// owns `stride()` consecutive entries laid out as
///   theta_d (2) | theta_alpha_i (2 x (2+tau), row-major) | theta_alpha_0 (2 x (2+tau)) | theta_0 (2).
struct ParamLayout {
  int n_agents = 0;
  int tau = 3;

  int state_dim() const { return 2 + tau; }
  int stride() const { return 2 + 4 * state_dim() + 2; }
  Eigen::Index size() const { return static_cast<Eigen::Index>(n_agents) * stride(); }
  Eigen::Index offset(int agent) const { return static_cast<Eigen::Index>(agent) * stride(); }
  Eigen::Index soc_block(int agent) const { return offset(agent); }
  Eigen::Index local_block(int agent) const { return offset(agent) + 2; }
  Eigen::Index root_block(int agent) const { return offset(agent) + 2 + 2 * state_dim(); }
  Eigen::Index bias_block(int agent) const { return offset(agent) + 2 + 4 * state_dim(); }

  friend bool operator==(const ParamLayout&, const ParamLayout&) = default;
};

/// Unpacked copy of one agent's affine policy.
struct AgentPolicy {
  Eigen::Vector2d soc;                                       // theta_d
  Eigen::Matrix<double, 2, Eigen::Dynamic> local;            // theta_alpha_i
  Eigen::Matrix<double, 2, Eigen::Dynamic> root;             // theta_alpha_0
  Eigen::Vector2d bias;                                      // theta_0
};

struct PolicyParams {
  ParamLayout layout;
  Eigen::VectorXd theta;

  AgentPolicy unpack(int agent) const;
  void pack(int agent, const AgentPolicy& block);
  void check_agent(int agent) const;
};

PolicyParams init_params(int n_agents, int tau);

/// a_i = theta_d d_i + theta_alpha_i alpha_i + theta_alpha_0 alpha_0 + theta_0 + eta_i.
/// Deterministic mode ignores eta.
Eigen::Vector2d act(const PolicyParams& params, int agent, double soc, const Eigen::Ref<const Eigen::VectorXd>& alpha_i,
                    const Eigen::Ref<const Eigen::VectorXd>& alpha_0, const Eigen::Vector2d& eta, PolicyMode mode);

/// Draws eta_i ~ N(0, diag(pbar*^2, qbar*^2)) for each agent, as rows (a_p, a_q).
Eigen::MatrixXd sample_policy_noise(const std::vector<NodeLoad>& agent_nominal, Rng& rng);

void to_json(nlohmann::json& j, const PolicyParams& params);
void from_json(const nlohmann::json& j, PolicyParams& params);

void save_policy(const PolicyParams& params, const std::string& path, const nlohmann::json& header = {});
PolicyParams load_policy(const std::string& path);

}  // namespace dlmp
