#pragma once

#include "dlmp/netmodel.hpp"
#include "dlmp/random.hpp"

#include <Eigen/Dense>

namespace dlmp {

/// Noisy-sinusoid model for the substation LMP and the inelastic demand.
struct ExoConfig {
  int tau = 3;             // noise memory (shift-register slots)
  double kappa = 0.5;      // sinusoid amplitude factor
  double sigma_xi = 0.1;   // noise weight in the measurement
  double z = 0.9;          // cross-node noise correlation
  double lambda_star = 1.0;
  double delta_min = 3.0;  // demand phase lead, hours
  double delta_max = 9.0;
  double period_hours = 24.0;

  void validate() const;
  int state_dim() const { return 2 + tau; }
};

/// Row i holds alpha_i = [cos, sin, xi_newest, ..., xi_oldest]; row 0 drives
/// the LMP and rows 1..|N| the demand at node i.
struct ExoState {
  Eigen::MatrixXd alpha;
  Eigen::VectorXd phase_offsets;  // delta_i, hours; delta_0 = 0

  friend bool operator==(const ExoState& a, const ExoState& b) {
    return a.alpha == b.alpha && a.phase_offsets == b.phase_offsets;
  }
};

struct ExoMeasurement {
  double lambda = 0.0;
  Eigen::VectorXd pbar;  // per non-root node
  Eigen::VectorXd qbar;
};

/// Draws t0 ~ U(0, 23), delta_i ~ U(delta_min, delta_max) and places each
/// rotation pair on the unit circle at angle 2 pi (t0 + delta_i) / period.
ExoState sample_initial(const ExoConfig& cfg, int n_nodes, Rng& rng);

/// Same as sample_initial with t0 and the offsets given (delta_0 forced to 0).
ExoState initial_state(const ExoConfig& cfg, double t0, const Eigen::VectorXd& offsets);

/// xi ~ N(0, z 11^T + (1 - z) I), one entry per node including the root.
Eigen::VectorXd sample_noise(const ExoConfig& cfg, int n_nodes, Rng& rng);

/// Advances every rotation pair by 2 pi / period and pushes xi_i into the
/// newest register slot of row i, dropping the oldest.
ExoState step(const ExoState& state, const Eigen::VectorXd& xi, const ExoConfig& cfg);

/// lambda = lambda* (1 + kappa m^T alpha_0); demand_i = nominal_i (1 + kappa m^T alpha_i)
/// with m = [1, 0, sigma_xi 1^T].
ExoMeasurement measure(const ExoState& state, const ExoConfig& cfg, const std::vector<NodeLoad>& nominal_load);

}  // namespace dlmp
