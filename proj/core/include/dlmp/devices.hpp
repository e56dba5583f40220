#pragma once

#include "dlmp/netmodel.hpp"

#include <Eigen/Dense>

#include <array>
#include <memory>
#include <vector>

namespace dlmp {

struct StorageSpec {
  double d_max = 1.0;  // energy capacity, p.u. h
  double b = 1.0;      // inverter apparent-power rating, p.u.

  void validate() const;
};

/// Sizing rule: d_max = capacity_hours * pbar*, b = inverter_factor * |sbar*|.
struct DeviceConfig {
  double capacity_hours = 6.0;
  double inverter_factor = 1.5;
};

StorageSpec size_storage(const NodeLoad& nominal, const DeviceConfig& cfg);

struct StorageFleet {
  Eigen::VectorXd d;  // state of charge per prosumer
  std::vector<StorageSpec> specs;
};

/// Lazily projected storage set-point together with its a.e. Jacobians.
struct Projection {
  double p = 0.0;
  double q = 0.0;
  Eigen::Matrix2d d_action = Eigen::Matrix2d::Identity();  // d(p, q) / d(a_p, a_q)
  Eigen::Vector2d d_soc = Eigen::Vector2d::Zero();         // d(p, q) / d(d)
  bool clipped = false;
  bool scaled = false;
};

/// Clips a_p into [-d, d_max - d], then scales (a_p, a_q) radially onto the
/// inverter disc if it lies outside. Points exactly on a kink take the
/// interior branch.
Projection project(double a_p, double a_q, double d, const StorageSpec& spec);

/// d + p. Throws std::logic_error if the result leaves [0, d_max] by more than
/// rounding, which means the set-point was not projected.
double step_soc(double d, double p, const StorageSpec& spec);

/// Prosumer utility u_i(d_i, p_i, q_i) for the storage state and set-point.
class Utility {
 public:
  virtual ~Utility() = default;
  virtual double value(std::size_t agent, double d, double p, double q) const = 0;
  /// (du/dd, du/dp, du/dq)
  virtual std::array<double, 3> gradient(std::size_t agent, double d, double p, double q) const = 0;
  virtual bool is_zero() const { return false; }
};

class ZeroUtility final : public Utility {
 public:
  double value(std::size_t, double, double, double) const override { return 0.0; }
  std::array<double, 3> gradient(std::size_t, double, double, double) const override { return {0.0, 0.0, 0.0}; }
  bool is_zero() const override { return true; }
};

/// -wear (p^2 + q^2) - comfort (d - target)^2; a degradation-style penalty.
class QuadraticUtility final : public Utility {
 public:
  QuadraticUtility(double wear, double comfort, std::vector<double> target)
      : wear_(wear), comfort_(comfort), target_(std::move(target)) {}
  double value(std::size_t agent, double d, double p, double q) const override;
  std::array<double, 3> gradient(std::size_t agent, double d, double p, double q) const override;

 private:
  double wear_;
  double comfort_;
  std::vector<double> target_;
};

}  // namespace dlmp
