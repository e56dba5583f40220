#pragma once

#include "dlmp/netmodel.hpp"

#include <Eigen/Dense>

namespace dlmp {

struct FlowSolution {
  Eigen::VectorXd P;  // per-edge real flow
  Eigen::VectorXd Q;  // per-edge reactive flow
  Eigen::VectorXd v;  // per-node voltage magnitude
  double losses = 0.0;  // sum_e r_e (P_e^2 + Q_e^2)
};

struct PriceVector {
  Eigen::VectorXd mu_p;  // dC/dp_i
  Eigen::VectorXd mu_q;  // dC/dq_i
  double lambda = 0.0;
};

FlowSolution solve(const Sensitivities& sens, const Eigen::VectorXd& p, const Eigen::VectorXd& q, double v0);

/// DSO cost (1-w) lambda (sum p + losses) + w sum (v - v0)^2.
double dso_cost(const FlowSolution& sol, const Eigen::VectorXd& p, double lambda, double w, double v0);

/// Closed-form gradient of dso_cost with respect to the nodal loads.
PriceVector nodal_prices(const Sensitivities& sens, const Eigen::VectorXd& p, const Eigen::VectorXd& q,
                         double lambda, double w, double v0);

/// L(lambda) = lambda (1-w) blockdiag(G, G) + w [R; X][R X], with G the loss
/// Gram matrix. Symmetric positive semidefinite, 2|N| x 2|N|.
Eigen::MatrixXd potential_matrix(const Sensitivities& sens, double lambda, double w);

/// Diagonal 2x2 blocks of L(lambda): entry k holds L restricted to {k, k+|N|}.
/// Returned as three vectors (pp, pq, qq) since each block is symmetric.
struct SelfBlocks {
  Eigen::VectorXd pp;
  Eigen::VectorXd pq;
  Eigen::VectorXd qq;
};
SelfBlocks potential_self_blocks(const Sensitivities& sens, double lambda, double w);

/// C(p, q, lambda) plus the per-node quadratic self terms of L(lambda).
double potential_cost(const Eigen::VectorXd& p, const Eigen::VectorXd& q, double lambda, double w,
                      const Sensitivities& sens);

/// Gradient of potential_cost with respect to (p, q).
struct LoadGradient {
  Eigen::VectorXd dp;
  Eigen::VectorXd dq;
};
LoadGradient potential_cost_gradient(const Sensitivities& sens, const Eigen::VectorXd& p,
                                     const Eigen::VectorXd& q, double lambda, double w);

/// Share of the real power drawn through the substation lost in lines:
/// losses / (sum p + losses).
double losses_fraction(const FlowSolution& sol, const Eigen::VectorXd& p);

}  // namespace dlmp
