#include "dlmp/exogenous.hpp"

#include "dlmp/errors.hpp"

#include <cmath>
#include <numbers>

namespace dlmp {
namespace {

double m_dot(const ExoConfig& cfg, const Eigen::Ref<const Eigen::RowVectorXd>& alpha) {
  return alpha(0) + cfg.sigma_xi * alpha.tail(cfg.tau).sum();
}

}  // namespace

void ExoConfig::validate() const {
  if (tau < 1) throw ArgumentError("tau must be at least 1");
  if (!(z >= 0.0 && z <= 1.0)) throw ArgumentError("noise correlation z must lie in [0, 1]");
  if (!(delta_min <= delta_max)) throw ArgumentError("delta_min must not exceed delta_max");
  if (!(period_hours > 0.0)) throw ArgumentError("period_hours must be positive");
}

ExoState initial_state(const ExoConfig& cfg, double t0, const Eigen::VectorXd& offsets) {
  cfg.validate();
  const auto n_nodes = offsets.size();
  ExoState state;
  state.alpha = Eigen::MatrixXd::Zero(n_nodes, cfg.state_dim());
  state.phase_offsets = offsets;
  if (n_nodes > 0) state.phase_offsets(0) = 0.0;
  for (Eigen::Index i = 0; i < n_nodes; ++i) {
    const double angle = 2.0 * std::numbers::pi * (t0 + state.phase_offsets(i)) / cfg.period_hours;
    state.alpha(i, 0) = std::cos(angle);
    state.alpha(i, 1) = std::sin(angle);
  }
  return state;
}

ExoState sample_initial(const ExoConfig& cfg, int n_nodes, Rng& rng) {
  cfg.validate();
  std::uniform_real_distribution<double> start(0.0, 23.0);
  const double t0 = start(rng);
  Eigen::VectorXd offsets = Eigen::VectorXd::Zero(n_nodes);
  if (cfg.delta_max > cfg.delta_min) {
    std::uniform_real_distribution<double> lead(cfg.delta_min, cfg.delta_max);
    for (int i = 1; i < n_nodes; ++i) offsets(i) = lead(rng);
  } else {
    offsets.tail(n_nodes - 1).setConstant(cfg.delta_min);
  }
  return initial_state(cfg, t0, offsets);
}

Eigen::VectorXd sample_noise(const ExoConfig& cfg, int n_nodes, Rng& rng) {
  cfg.validate();
  // One-factor form of the equicorrelated covariance: sqrt(z) g + sqrt(1-z) e_i.
  std::normal_distribution<double> normal(0.0, 1.0);
  const double common = normal(rng);
  const double a = std::sqrt(cfg.z);
  const double b = std::sqrt(1.0 - cfg.z);
  Eigen::VectorXd xi(n_nodes);
  for (int i = 0; i < n_nodes; ++i) xi(i) = a * common + b * normal(rng);
  return xi;
}

ExoState step(const ExoState& state, const Eigen::VectorXd& xi, const ExoConfig& cfg) {
  if (xi.size() != state.alpha.rows()) throw ArgumentError("noise vector length must equal node count");
  if (state.alpha.cols() != cfg.state_dim()) throw ArgumentError("exogenous state width does not match tau");
  const double angle = 2.0 * std::numbers::pi / cfg.period_hours;
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  ExoState next;
  next.phase_offsets = state.phase_offsets;
  next.alpha.resize(state.alpha.rows(), state.alpha.cols());
  next.alpha.col(0) = c * state.alpha.col(0) - s * state.alpha.col(1);
  next.alpha.col(1) = s * state.alpha.col(0) + c * state.alpha.col(1);
  next.alpha.col(2) = xi;
  for (int k = 1; k < cfg.tau; ++k) next.alpha.col(2 + k) = state.alpha.col(1 + k);
  return next;
}

ExoMeasurement measure(const ExoState& state, const ExoConfig& cfg, const std::vector<NodeLoad>& nominal_load) {
  const auto n = static_cast<Eigen::Index>(nominal_load.size());
  if (state.alpha.rows() != n + 1) throw ArgumentError("exogenous state rows must equal |N| + 1");
  ExoMeasurement out;
  out.lambda = cfg.lambda_star * (1.0 + cfg.kappa * m_dot(cfg, state.alpha.row(0)));
  out.pbar.resize(n);
  out.qbar.resize(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double factor = 1.0 + cfg.kappa * m_dot(cfg, state.alpha.row(k + 1));
    out.pbar(k) = nominal_load[k].p * factor;
    out.qbar(k) = nominal_load[k].q * factor;
  }
  return out;
}

}  // namespace dlmp
