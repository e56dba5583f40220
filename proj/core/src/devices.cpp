#include "dlmp/devices.hpp"

#include "dlmp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace dlmp {

void StorageSpec::validate() const {
  if (!(d_max > 0.0)) throw ArgumentError("storage capacity must be positive");
  if (!(b > 0.0)) throw ArgumentError("inverter rating must be positive");
}

StorageSpec size_storage(const NodeLoad& nominal, const DeviceConfig& cfg) {
  StorageSpec spec{cfg.capacity_hours * nominal.p, cfg.inverter_factor * std::hypot(nominal.p, nominal.q)};
  spec.validate();
  return spec;
}

Projection project(double a_p, double a_q, double d, const StorageSpec& spec) {
  Projection out;
  const double lo = -d;
  const double hi = spec.d_max - d;
  double c = a_p;
  double dc_da = 1.0;
  double dc_dd = 0.0;
  if (a_p < lo) {
    c = lo;
    dc_da = 0.0;
    dc_dd = -1.0;
    out.clipped = true;
  } else if (a_p > hi) {
    c = hi;
    dc_da = 0.0;
    dc_dd = -1.0;
    out.clipped = true;
  }

  // Jacobian of the clip stage: rows (c, a_q), columns (a_p, a_q).
  Eigen::Matrix2d clip_action;
  clip_action << dc_da, 0.0, 0.0, 1.0;
  const Eigen::Vector2d clip_soc(dc_dd, 0.0);

  const double norm = std::hypot(c, a_q);
  if (norm > spec.b) {
    const Eigen::Vector2d y(c, a_q);
    const double k = spec.b / norm;
    out.p = k * c;
    out.q = k * a_q;
    const Eigen::Matrix2d radial = k * (Eigen::Matrix2d::Identity() - y * y.transpose() / (norm * norm));
    out.d_action = radial * clip_action;
    out.d_soc = radial * clip_soc;
    out.scaled = true;
  } else {
    out.p = c;
    out.q = a_q;
    out.d_action = clip_action;
    out.d_soc = clip_soc;
  }
  return out;
}

double step_soc(double d, double p, const StorageSpec& spec) {
  const double next = d + p;
  const double slack = 1e-9 * std::max(1.0, spec.d_max);
  if (next < -slack || next > spec.d_max + slack || !std::isfinite(next)) {
    throw std::logic_error("state of charge " + std::to_string(next) + " outside [0, " +
                           std::to_string(spec.d_max) + "]: set-point was not projected");
  }
  return std::clamp(next, 0.0, spec.d_max);
}

double QuadraticUtility::value(std::size_t agent, double d, double p, double q) const {
  const double gap = d - target_.at(agent);
  return -wear_ * (p * p + q * q) - comfort_ * gap * gap;
}

std::array<double, 3> QuadraticUtility::gradient(std::size_t agent, double d, double p, double q) const {
  const double gap = d - target_.at(agent);
  return {-2.0 * comfort_ * gap, -2.0 * wear_ * p, -2.0 * wear_ * q};
}

}  // namespace dlmp
