#include "dlmp/policy.hpp"

#include "dlmp/errors.hpp"

#include <fstream>

namespace dlmp {

void PolicyParams::check_agent(int agent) const {
  if (agent < 0 || agent >= layout.n_agents) {
    throw ArgumentError("agent index " + std::to_string(agent) + " out of range [0, " +
                        std::to_string(layout.n_agents) + ")");
  }
  if (theta.size() != layout.size()) throw ArgumentError("parameter vector does not match its layout");
}

AgentPolicy PolicyParams::unpack(int agent) const {
  check_agent(agent);
  const int k = layout.state_dim();
  AgentPolicy out;
  out.soc = theta.segment<2>(layout.soc_block(agent));
  out.local.resize(2, k);
  out.root.resize(2, k);
  for (int row = 0; row < 2; ++row) {
    out.local.row(row) = theta.segment(layout.local_block(agent) + row * k, k).transpose();
    out.root.row(row) = theta.segment(layout.root_block(agent) + row * k, k).transpose();
  }
  out.bias = theta.segment<2>(layout.bias_block(agent));
  return out;
}

void PolicyParams::pack(int agent, const AgentPolicy& block) {
  check_agent(agent);
  const int k = layout.state_dim();
  if (block.local.cols() != k || block.root.cols() != k) throw ArgumentError("policy block width does not match tau");
  theta.segment<2>(layout.soc_block(agent)) = block.soc;
  for (int row = 0; row < 2; ++row) {
    theta.segment(layout.local_block(agent) + row * k, k) = block.local.row(row).transpose();
    theta.segment(layout.root_block(agent) + row * k, k) = block.root.row(row).transpose();
  }
  theta.segment<2>(layout.bias_block(agent)) = block.bias;
}

PolicyParams init_params(int n_agents, int tau) {
  if (n_agents < 1) throw ArgumentError("need at least one agent");
  if (tau < 1) throw ArgumentError("tau must be at least 1");
  PolicyParams params;
  params.layout = ParamLayout{n_agents, tau};
  params.theta = Eigen::VectorXd::Zero(params.layout.size());
  return params;
}

Eigen::Vector2d act(const PolicyParams& params, int agent, double soc, const Eigen::Ref<const Eigen::VectorXd>& alpha_i,
                    const Eigen::Ref<const Eigen::VectorXd>& alpha_0, const Eigen::Vector2d& eta, PolicyMode mode) {
  params.check_agent(agent);
  const auto& L = params.layout;
  const int k = L.state_dim();
  if (alpha_i.size() != k || alpha_0.size() != k) throw ArgumentError("exogenous state width does not match tau");
  const auto& th = params.theta;
  Eigen::Vector2d a = th.segment<2>(L.soc_block(agent)) * soc + th.segment<2>(L.bias_block(agent));
  for (int row = 0; row < 2; ++row) {
    a(row) += th.segment(L.local_block(agent) + row * k, k).dot(alpha_i);
    a(row) += th.segment(L.root_block(agent) + row * k, k).dot(alpha_0);
  }
  if (mode == PolicyMode::Stochastic) a += eta;
  return a;
}

Eigen::MatrixXd sample_policy_noise(const std::vector<NodeLoad>& agent_nominal, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd eta(static_cast<Eigen::Index>(agent_nominal.size()), 2);
  for (std::size_t i = 0; i < agent_nominal.size(); ++i) {
    eta(static_cast<Eigen::Index>(i), 0) = agent_nominal[i].p * normal(rng);
    eta(static_cast<Eigen::Index>(i), 1) = agent_nominal[i].q * normal(rng);
  }
  return eta;
}

void to_json(nlohmann::json& j, const PolicyParams& params) {
  j = nlohmann::json{{"layout", {{"n_agents", params.layout.n_agents}, {"tau", params.layout.tau}}},
                     {"theta", std::vector<double>(params.theta.data(), params.theta.data() + params.theta.size())}};
}

void from_json(const nlohmann::json& j, PolicyParams& params) {
  const auto& layout = j.at("layout");
  params = init_params(layout.at("n_agents").get<int>(), layout.at("tau").get<int>());
  const auto values = j.at("theta").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(values.size()) != params.layout.size()) {
    throw ArgumentError("policy has " + std::to_string(values.size()) + " parameters, layout expects " +
                        std::to_string(params.layout.size()));
  }
  params.theta = Eigen::Map<const Eigen::VectorXd>(values.data(), params.layout.size());
}

void save_policy(const PolicyParams& params, const std::string& path, const nlohmann::json& header) {
  nlohmann::json doc = params;
  if (!header.is_null()) doc["meta"] = header;
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write policy file: " + path);
  out << doc.dump(2) << '\n';
}

PolicyParams load_policy(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open policy file: " + path);
  try {
    return nlohmann::json::parse(in).get<PolicyParams>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("policy file " + path + " is malformed: " + e.what());
  }
}

}  // namespace dlmp
