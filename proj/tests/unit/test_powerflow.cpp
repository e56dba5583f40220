#include "dlmp/errors.hpp"
#include "dlmp/powerflow.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

using namespace dlmp;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> xs) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index k = 0;
  for (double x : xs) v(k++) = x;
  return v;
}

double cost_at(const Sensitivities& s, const Eigen::VectorXd& p, const Eigen::VectorXd& q, double lambda,
               double w) {
  return dso_cost(solve(s, p, q, s.v0), p, lambda, w, s.v0);
}

}  // namespace

TEST(Solve, SingleLineByHand) {
  const auto s = build_sensitivities(test::single_line());
  const auto sol = solve(s, vec({1.0}), vec({0.5}), 1.0);
  EXPECT_DOUBLE_EQ(sol.P(0), 1.0);
  EXPECT_DOUBLE_EQ(sol.Q(0), 0.5);
  EXPECT_NEAR(sol.v(0), 0.8, 1e-15);
  EXPECT_NEAR(sol.losses, 0.125, 1e-15);
}

TEST(Solve, ZeroLoadAndLinearity) {
  Rng rng(3);
  const auto net = test::random_tree(6, rng);
  const auto s = build_sensitivities(net);
  const auto zero = solve(s, Eigen::VectorXd::Zero(6), Eigen::VectorXd::Zero(6), 1.0);
  EXPECT_EQ(zero.P.norm(), 0.0);
  EXPECT_EQ(zero.Q.norm(), 0.0);
  EXPECT_EQ(zero.v, Eigen::VectorXd::Ones(6));
  EXPECT_EQ(zero.losses, 0.0);

  const Eigen::VectorXd p = test::random_vector(6, rng);
  const Eigen::VectorXd q = test::random_vector(6, rng);
  EXPECT_TRUE(solve(s, 2 * p, 2 * q, 1.0).P.isApprox(2 * solve(s, p, q, 1.0).P, 1e-15));
  EXPECT_GE(solve(s, p, q, 1.0).losses, 0.0);
}

TEST(Solve, DimensionMismatch) {
  const auto s = build_sensitivities(test::two_series());
  EXPECT_THROW(solve(s, vec({1.0}), vec({1.0, 2.0}), 1.0), ArgumentError);
}

TEST(DsoCost, Examples) {
  const auto s = build_sensitivities(test::single_line());
  const auto sol = solve(s, vec({1.0}), vec({0.5}), 1.0);
  EXPECT_NEAR(dso_cost(sol, vec({1.0}), 1.0, 0.0, 1.0), 1.125, 1e-15);

  const auto zero = solve(s, vec({0.0}), vec({0.0}), 1.0);
  EXPECT_EQ(dso_cost(zero, vec({0.0}), 1.7, 0.3, 1.0), 0.0);

  EXPECT_DOUBLE_EQ(dso_cost(sol, vec({1.0}), 0.2, 1.0, 1.0), dso_cost(sol, vec({1.0}), 5.0, 1.0, 1.0));
  EXPECT_THROW(dso_cost(sol, vec({1.0}), 1.0, 1.5, 1.0), ArgumentError);
  EXPECT_THROW(dso_cost(sol, vec({1.0}), 1.0, -0.1, 1.0), ArgumentError);
}

TEST(NodalPrices, Examples) {
  const auto s = build_sensitivities(test::single_line());
  const auto zero = nodal_prices(s, vec({0.0}), vec({0.0}), 1.3, 0.25, 1.0);
  EXPECT_NEAR(zero.mu_p(0), 0.75 * 1.3, 1e-15);
  EXPECT_EQ(zero.mu_q(0), 0.0);
  EXPECT_EQ(zero.lambda, 1.3);

  const auto volt = nodal_prices(s, vec({1.0}), vec({0.0}), 1.0, 1.0, 1.0);
  EXPECT_NEAR(volt.mu_p(0), 0.02, 1e-15);
}

TEST(NodalPrices, MatchFiniteDifferencesOfCost) {
  Rng rng(23);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 1 + trial % 8;
    const auto s = build_sensitivities(test::random_tree(n, rng));
    const Eigen::VectorXd p = test::random_vector(n, rng, -2.0, 2.0);
    const Eigen::VectorXd q = test::random_vector(n, rng, -2.0, 2.0);
    const double lambda = 0.2 + 2.0 * unit(rng);
    const double w = unit(rng);
    const auto prices = nodal_prices(s, p, q, lambda, w, s.v0);
    // The cost is quadratic, so a unit central difference is exact up to rounding.
    for (int k = 0; k < n; ++k) {
      Eigen::VectorXd hi = p, lo = p;
      hi(k) += 1.0;
      lo(k) -= 1.0;
      const double fd_p = 0.5 * (cost_at(s, hi, q, lambda, w) - cost_at(s, lo, q, lambda, w));
      hi = q;
      lo = q;
      hi(k) += 1.0;
      lo(k) -= 1.0;
      const double fd_q = 0.5 * (cost_at(s, p, hi, lambda, w) - cost_at(s, p, lo, lambda, w));
      worst = std::max({worst, test::rel_err(prices.mu_p(k), fd_p), test::rel_err(prices.mu_q(k), fd_q)});
    }
  }
  EXPECT_LE(worst, 1e-8);
}

TEST(PotentialMatrix, Examples) {
  const auto zero = build_sensitivities(test::two_series().without_impedance());
  EXPECT_EQ(potential_matrix(zero, 1.0, 0.5).norm(), 0.0);

  const auto s = build_sensitivities(test::single_line());
  Eigen::Matrix2d expected = Eigen::Matrix2d::Zero();
  expected(0, 0) = 0.1;
  expected(1, 1) = 0.1;
  EXPECT_TRUE(potential_matrix(s, 1.0, 0.0).isApprox(expected, 1e-15));
}

TEST(PotentialMatrix, PositiveSemidefinite) {
  Rng rng(29);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const auto s = build_sensitivities(test::random_tree(1 + trial % 10, rng));
    const auto L = potential_matrix(s, 2.0 * unit(rng), unit(rng));
    EXPECT_TRUE(L.isApprox(L.transpose(), 1e-14));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(L);
    EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-12);
  }
}

TEST(PotentialMatrix, SelfBlocksAreDiagonalBlocks) {
  Rng rng(31);
  const auto s = build_sensitivities(test::random_tree(7, rng));
  const auto L = potential_matrix(s, 1.3, 0.6);
  const auto blocks = potential_self_blocks(s, 1.3, 0.6);
  for (int k = 0; k < 7; ++k) {
    EXPECT_NEAR(blocks.pp(k), L(k, k), 1e-14);
    EXPECT_NEAR(blocks.pq(k), L(k, k + 7), 1e-14);
    EXPECT_NEAR(blocks.qq(k), L(k + 7, k + 7), 1e-14);
  }
}

TEST(PotentialCost, Examples) {
  const auto s = build_sensitivities(test::single_line());
  EXPECT_EQ(potential_cost(vec({0.0}), vec({0.0}), 1.0, 0.3, s), 0.0);
  // C = 1 + 0.1 = 1.1 and the self term adds 0.1 p^2 at w = 0.
  EXPECT_NEAR(potential_cost(vec({1.0}), vec({0.0}), 1.0, 0.0, s), 1.2, 1e-15);
  // With q = 0.5: C = 1.125, self terms 0.1 (1 + 0.25) = 0.125.
  EXPECT_NEAR(potential_cost(vec({1.0}), vec({0.5}), 1.0, 0.0, s), 1.25, 1e-15);

  const auto z = build_sensitivities(test::two_series().without_impedance());
  const auto p = vec({0.4, 0.7});
  EXPECT_NEAR(potential_cost(p, vec({0.1, 0.2}), 1.5, 0.2, z), 0.8 * 1.5 * 1.1, 1e-15);
}

// Direct form: C + sum_k z_k^T L_kk z_k with L built in full.
TEST(PotentialCost, MatchesFullMatrixForm) {
  Rng rng(37);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + trial % 9;
    const auto s = build_sensitivities(test::random_tree(n, rng));
    const Eigen::VectorXd p = test::random_vector(n, rng);
    const Eigen::VectorXd q = test::random_vector(n, rng);
    const double lambda = 1.1;
    const double w = 0.4;
    const auto L = potential_matrix(s, lambda, w);
    double self = 0.0;
    for (int k = 0; k < n; ++k) {
      Eigen::Vector2d z(p(k), q(k));
      Eigen::Matrix2d Lkk;
      Lkk << L(k, k), L(k, k + n), L(k + n, k), L(k + n, k + n);
      self += z.dot(Lkk * z);
    }
    EXPECT_NEAR(potential_cost(p, q, lambda, w, s), cost_at(s, p, q, lambda, w) + self, 1e-12);
  }
}

TEST(PotentialCost, GradientMatchesFiniteDifferences) {
  Rng rng(41);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + trial % 8;
    const auto s = build_sensitivities(test::random_tree(n, rng));
    const Eigen::VectorXd p = test::random_vector(n, rng);
    const Eigen::VectorXd q = test::random_vector(n, rng);
    const auto g = potential_cost_gradient(s, p, q, 0.9, 0.7);
    for (int k = 0; k < n; ++k) {
      Eigen::VectorXd hi = p, lo = p;
      hi(k) += 1.0;
      lo(k) -= 1.0;
      worst = std::max(worst, test::rel_err(g.dp(k), 0.5 * (potential_cost(hi, q, 0.9, 0.7, s) -
                                                             potential_cost(lo, q, 0.9, 0.7, s))));
      hi = q;
      lo = q;
      hi(k) += 1.0;
      lo(k) -= 1.0;
      worst = std::max(worst, test::rel_err(g.dq(k), 0.5 * (potential_cost(p, hi, 0.9, 0.7, s) -
                                                             potential_cost(p, lo, 0.9, 0.7, s))));
    }
  }
  EXPECT_LE(worst, 1e-9);
}

// p_i dC/dp_i + q_i dC/dq_i - C~ has no gradient in (p_i, q_i).
TEST(PotentialCost, PriceMinusPotentialGapIsFlatInOwnLoad) {
  Rng rng(43);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + trial % 8;
    const auto s = build_sensitivities(test::random_tree(n, rng));
    const Eigen::VectorXd p0 = test::random_vector(n, rng);
    const Eigen::VectorXd q0 = test::random_vector(n, rng);
    const double lambda = 1.2;
    const double w = 0.6;
    const int i = trial % n;
    auto gap = [&](const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
      const auto mu = nodal_prices(s, p, q, lambda, w, s.v0);
      return p(i) * mu.mu_p(i) + q(i) * mu.mu_q(i) - potential_cost(p, q, lambda, w, s);
    };
    for (int dir = 0; dir < 2; ++dir) {
      Eigen::VectorXd ph = p0, pl = p0, qh = q0, ql = q0;
      if (dir == 0) {
        ph(i) += 1e-3;
        pl(i) -= 1e-3;
      } else {
        qh(i) += 1e-3;
        ql(i) -= 1e-3;
      }
      worst = std::max(worst, std::abs(gap(ph, qh) - gap(pl, ql)) / 2e-3);
    }
  }
  EXPECT_LE(worst, 1e-8);
}

TEST(LossesFraction, Case18Calibration) {
  const auto net = test::case18_tripled();
  const auto s = build_sensitivities(net);
  Eigen::VectorXd p(net.node_count), q(net.node_count);
  for (int k = 0; k < net.node_count; ++k) {
    p(k) = net.nominal_load[k].p;
    q(k) = net.nominal_load[k].q;
  }
  const auto sol = solve(s, p, q, net.v0);
  const double fraction = losses_fraction(sol, p);
  EXPECT_NEAR(fraction, sol.losses / (p.sum() + sol.losses), 1e-15);
  EXPECT_GT(fraction, 0.0);
  EXPECT_LT(fraction, 1.0);
}
