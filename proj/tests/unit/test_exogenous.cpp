#include "dlmp/errors.hpp"
#include "dlmp/exogenous.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace dlmp;

namespace {

constexpr double kPi = std::numbers::pi;

Eigen::RowVectorXd row(std::initializer_list<double> xs) {
  Eigen::RowVectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index k = 0;
  for (double x : xs) v(k++) = x;
  return v;
}

}  // namespace

TEST(ExoInitial, ForcedPhases) {
  ExoConfig cfg;
  const auto s0 = initial_state(cfg, 0.0, Eigen::VectorXd::Zero(3));
  EXPECT_EQ(s0.alpha.cols(), 5);
  for (int i = 0; i < 3; ++i) EXPECT_TRUE(s0.alpha.row(i).isApprox(row({1, 0, 0, 0, 0}), 1e-15));

  const auto s6 = initial_state(cfg, 6.0, Eigen::VectorXd::Zero(3));
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(s6.alpha(i, 0), 0.0, 1e-15);
    EXPECT_NEAR(s6.alpha(i, 1), 1.0, 1e-15);
  }
}

TEST(ExoInitial, RootHasNoOffsetAndMeanOffsetIsSix) {
  ExoConfig cfg;
  Rng rng(1);
  double sum = 0.0;
  int count = 0;
  for (int k = 0; k < 10000; ++k) {
    const auto s = sample_initial(cfg, 2, rng);
    EXPECT_EQ(s.phase_offsets(0), 0.0);
    sum += s.phase_offsets(1);
    ++count;
  }
  EXPECT_NEAR(sum / count, 6.0, 0.1);
}

TEST(ExoNoise, IndependentWhenZIsZero) {
  ExoConfig cfg;
  cfg.z = 0.0;
  Rng rng(2);
  constexpr int kDraws = 100000;
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (int k = 0; k < kDraws; ++k) {
    const Eigen::Vector3d xi = sample_noise(cfg, 3, rng);
    cov += xi * xi.transpose();
  }
  cov /= kDraws;
  EXPECT_LE((cov - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff(), 0.02);
}

TEST(ExoNoise, CorrelationMatchesZ) {
  ExoConfig cfg;
  Rng rng(3);
  constexpr int kDraws = 100000;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (int k = 0; k < kDraws; ++k) {
    const auto xi = sample_noise(cfg, 4, rng);
    sxy += xi(1) * xi(3);
    sxx += xi(1) * xi(1);
    syy += xi(3) * xi(3);
  }
  EXPECT_NEAR(sxy / std::sqrt(sxx * syy), 0.9, 0.02);
}

TEST(ExoNoise, FullyCorrelatedWhenZIsOne) {
  ExoConfig cfg;
  cfg.z = 1.0;
  Rng rng(4);
  const auto xi = sample_noise(cfg, 5, rng);
  for (int k = 1; k < 5; ++k) EXPECT_EQ(xi(k), xi(0));
}

TEST(ExoConfig, Validation) {
  ExoConfig cfg;
  cfg.z = 1.2;
  EXPECT_THROW(cfg.validate(), ArgumentError);
  Rng rng(0);
  EXPECT_THROW(sample_noise(cfg, 3, rng), ArgumentError);
  cfg = ExoConfig{};
  cfg.z = -0.1;
  EXPECT_THROW(cfg.validate(), ArgumentError);
  cfg = ExoConfig{};
  cfg.tau = 0;
  EXPECT_THROW(cfg.validate(), ArgumentError);
  cfg = ExoConfig{};
  cfg.delta_min = 10.0;
  EXPECT_THROW(cfg.validate(), ArgumentError);
  EXPECT_NO_THROW(ExoConfig{}.validate());
}

TEST(ExoStep, RotationAndRegister) {
  ExoConfig cfg;
  ExoState s = initial_state(cfg, 0.0, Eigen::VectorXd::Zero(2));
  Eigen::VectorXd xi(2);
  xi << 0.5, 0.5;
  const auto next = step(s, xi, cfg);
  EXPECT_TRUE(next.alpha.row(1).isApprox(row({std::cos(kPi / 12), std::sin(kPi / 12), 0.5, 0, 0}), 1e-15));
}

TEST(ExoStep, FullPeriodReturnsToStart) {
  ExoConfig cfg;
  const auto s0 = initial_state(cfg, 3.7, (Eigen::VectorXd(3) << 0, 4.2, 8.1).finished());
  auto s = s0;
  for (int t = 0; t < 24; ++t) s = step(s, Eigen::VectorXd::Zero(3), cfg);
  EXPECT_LE((s.alpha.leftCols(2) - s0.alpha.leftCols(2)).cwiseAbs().maxCoeff(), 1e-12);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(s.alpha.row(i).head(2).norm(), 1.0, 1e-12);
}

TEST(ExoStep, ShiftRegisterOrder) {
  ExoConfig cfg;
  ExoState s = initial_state(cfg, 0.0, Eigen::VectorXd::Zero(1));
  for (double v : {1.0, 2.0, 3.0}) s = step(s, Eigen::VectorXd::Constant(1, v), cfg);
  EXPECT_EQ(s.alpha.row(0).tail(3), row({3, 2, 1}));
  s = step(s, Eigen::VectorXd::Constant(1, 4.0), cfg);
  EXPECT_EQ(s.alpha.row(0).tail(3), row({4, 3, 2}));
}

TEST(ExoMeasure, Examples) {
  ExoConfig cfg;
  const std::vector<NodeLoad> nominal = {{2.0, 1.0}, {1.0, 0.5}};
  const auto s = initial_state(cfg, 0.0, Eigen::VectorXd::Zero(3));
  EXPECT_DOUBLE_EQ(measure(s, cfg, nominal).lambda, 1.5);

  ExoState zero = s;
  zero.alpha.setZero();
  const auto m = measure(zero, cfg, nominal);
  EXPECT_EQ(m.lambda, cfg.lambda_star);
  EXPECT_EQ(m.pbar(0), 2.0);
  EXPECT_EQ(m.qbar(1), 0.5);

  ExoState noisy = zero;
  noisy.alpha.row(1) << 0, 0, 1, 1, 1;
  EXPECT_NEAR(measure(noisy, cfg, nominal).pbar(0), 2.0 * (1 + 0.5 * 0.3), 1e-15);

  EXPECT_THROW(measure(s, cfg, {{1.0, 1.0}}), ArgumentError);
}

TEST(ExoMeasure, ZeroNoiseLmpSinusoid) {
  ExoConfig cfg;
  auto s = initial_state(cfg, 0.0, Eigen::VectorXd::Zero(1));
  double lo = 1e9;
  for (int t = 0; t < 24; ++t) {
    lo = std::min(lo, measure(s, cfg, {}).lambda);
    s = step(s, Eigen::VectorXd::Zero(1), cfg);
  }
  EXPECT_NEAR(lo, cfg.lambda_star * (1 - cfg.kappa), 1e-12);
}

TEST(ExoMeasure, DemandLeadsLmpByOffset) {
  ExoConfig cfg;
  cfg.period_hours = 24.0;
  const double delta = 5.0;
  // Continuous-time peak search on a fine grid of initial hours.
  double best_lmp = -1, best_demand = -1, t_lmp = 0, t_demand = 0;
  for (int k = 0; k < 24 * 100; ++k) {
    const double t0 = k / 100.0;
    const auto s = initial_state(cfg, t0, (Eigen::VectorXd(2) << 0, delta).finished());
    const auto m = measure(s, cfg, {{1.0, 0.0}});
    if (m.lambda > best_lmp) {
      best_lmp = m.lambda;
      t_lmp = t0;
    }
    if (m.pbar(0) > best_demand) {
      best_demand = m.pbar(0);
      t_demand = t0;
    }
  }
  EXPECT_NEAR(std::fmod(t_lmp - t_demand + 24.0, 24.0), delta, 0.011);
}
