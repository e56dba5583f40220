#include "dlmp/powerflow.hpp"

#include "dlmp/errors.hpp"

#include <string>

namespace dlmp {
namespace {

void check_loads(const Sensitivities& sens, const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  if (p.size() != sens.node_count() || q.size() != sens.node_count()) {
    throw ArgumentError("load vectors have length " + std::to_string(p.size()) + "/" + std::to_string(q.size()) +
                        ", network has " + std::to_string(sens.node_count()) + " nodes");
  }
}

void check_weight(double w) {
  if (!(w >= 0.0 && w <= 1.0)) throw ArgumentError("voltage weight w must lie in [0, 1]");
}

}  // namespace

FlowSolution solve(const Sensitivities& sens, const Eigen::VectorXd& p, const Eigen::VectorXd& q, double v0) {
  check_loads(sens, p, q);
  FlowSolution sol;
  sol.P = sens.H * p;
  sol.Q = sens.H * q;
  sol.v = Eigen::VectorXd::Constant(p.size(), v0) + sens.R * p + sens.X * q;
  sol.losses = sens.r.dot(sol.P.cwiseAbs2() + sol.Q.cwiseAbs2());
  return sol;
}

double dso_cost(const FlowSolution& sol, const Eigen::VectorXd& p, double lambda, double w, double v0) {
  check_weight(w);
  const double deviation = (sol.v.array() - v0).square().sum();
  return (1.0 - w) * lambda * (p.sum() + sol.losses) + w * deviation;
}

PriceVector nodal_prices(const Sensitivities& sens, const Eigen::VectorXd& p, const Eigen::VectorXd& q,
                         double lambda, double w, double /*v0*/) {
  check_loads(sens, p, q);
  check_weight(w);
  // v - v0 = R p + X q; the substation voltage cancels.
  const Eigen::VectorXd dv = sens.R * p + sens.X * q;
  PriceVector prices;
  prices.lambda = lambda;
  const double energy = (1.0 - w) * lambda;
  prices.mu_p = energy * (Eigen::VectorXd::Ones(p.size()) + 2.0 * (sens.loss_gram * p)) +
                2.0 * w * (sens.R.transpose() * dv);
  prices.mu_q = energy * 2.0 * (sens.loss_gram * q) + 2.0 * w * (sens.X.transpose() * dv);
  return prices;
}

Eigen::MatrixXd potential_matrix(const Sensitivities& sens, double lambda, double w) {
  check_weight(w);
  const auto n = sens.node_count();
  Eigen::MatrixXd RX(n, 2 * n);
  RX << sens.R, sens.X;
  Eigen::MatrixXd L = w * (RX.transpose() * RX);
  const double scale = lambda * (1.0 - w);
  L.topLeftCorner(n, n) += scale * sens.loss_gram;
  L.bottomRightCorner(n, n) += scale * sens.loss_gram;
  return L;
}

SelfBlocks potential_self_blocks(const Sensitivities& sens, double lambda, double w) {
  check_weight(w);
  // Diagonal of R^T R etc. is the column-wise squared norm.
  const double scale = lambda * (1.0 - w);
  SelfBlocks blocks;
  const Eigen::VectorXd gram_diag = sens.loss_gram.diagonal();
  blocks.pp = scale * gram_diag + w * sens.R.colwise().squaredNorm().transpose();
  blocks.qq = scale * gram_diag + w * sens.X.colwise().squaredNorm().transpose();
  blocks.pq = w * (sens.R.array() * sens.X.array()).colwise().sum().transpose();
  return blocks;
}

double potential_cost(const Eigen::VectorXd& p, const Eigen::VectorXd& q, double lambda, double w,
                      const Sensitivities& sens) {
  const auto sol = solve(sens, p, q, sens.v0);
  const double cost = dso_cost(sol, p, lambda, w, sens.v0);
  const auto blocks = potential_self_blocks(sens, lambda, w);
  const double self = (blocks.pp.array() * p.array().square() + 2.0 * blocks.pq.array() * p.array() * q.array() +
                       blocks.qq.array() * q.array().square())
                          .sum();
  return cost + self;
}

LoadGradient potential_cost_gradient(const Sensitivities& sens, const Eigen::VectorXd& p,
                                     const Eigen::VectorXd& q, double lambda, double w) {
  const auto prices = nodal_prices(sens, p, q, lambda, w, sens.v0);
  const auto blocks = potential_self_blocks(sens, lambda, w);
  LoadGradient g;
  g.dp = prices.mu_p.array() + 2.0 * (blocks.pp.array() * p.array() + blocks.pq.array() * q.array());
  g.dq = prices.mu_q.array() + 2.0 * (blocks.pq.array() * p.array() + blocks.qq.array() * q.array());
  return g;
}

double losses_fraction(const FlowSolution& sol, const Eigen::VectorXd& p) {
  return sol.losses / (p.sum() + sol.losses);
}

}  // namespace dlmp
