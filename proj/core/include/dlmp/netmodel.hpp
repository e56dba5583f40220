#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <string>
#include <string_view>
#include <vector>

namespace dlmp {

/// Directed line or transformer, oriented away from the substation.
struct Edge {
  int from = 0;
  int to = 0;
  double r = 0.0;  // per-unit resistance
  double x = 0.0;  // per-unit reactance

  friend bool operator==(const Edge&, const Edge&) = default;
};

struct NodeLoad {
  double p = 0.0;  // per-unit real
  double q = 0.0;  // per-unit reactive

  friend bool operator==(const NodeLoad&, const NodeLoad&) = default;
};

/// Radial distribution network. Node 0 is the substation; nodes 1..node_count
/// are the non-root buses. `nominal_load[k]` belongs to node k + 1, and every
/// vector indexed by node in this library follows the same shift.
struct Network {
  int node_count = 0;
  std::vector<Edge> edges;
  double v0 = 1.0;
  std::vector<NodeLoad> nominal_load;

  friend bool operator==(const Network&, const Network&) = default;

  /// Throws ArgumentError unless the network is a tree rooted at 0 with
  /// edges oriented away from it, nonnegative impedances and v0 > 0.
  void validate() const;

  /// Copy with r = x = 0 on every edge.
  Network without_impedance() const;
};

/// Linear DistFlow sensitivities: P = H p, Q = H q, v = v0 + R p + X q.
struct Sensitivities {
  Eigen::MatrixXd H;  // |L| x |N|, H(e, k) = 1 iff node k+1 is below edge e
  Eigen::MatrixXd R;  // -H^T diag(r) H
  Eigen::MatrixXd X;  // -H^T diag(x) H
  Eigen::VectorXd r;  // per-edge resistance, row order of H
  Eigen::VectorXd x;
  // H^T diag(r) H, the loss Gram matrix; equals -R.
  Eigen::MatrixXd loss_gram;
  double v0 = 1.0;

  int node_count() const { return static_cast<int>(H.cols()); }
};

/// Reads the bus, branch and baseMVA sections of a MATPOWER case. Buses are
/// renumbered in sorted order with the reference bus (type 3) at index 0.
/// Out-of-service branches (status 0) are dropped. Throws CaseError.
Network parse_case(std::string_view text);
Network load_case_file(const std::string& path);

/// Writes a MATPOWER case (baseMVA = 1) that parse_case maps back to `net`.
std::string write_case(const Network& net);

Network scale_loads(const Network& net, double factor);

Sensitivities build_sensitivities(const Network& net);

void to_json(nlohmann::json& j, const Network& net);
void from_json(const nlohmann::json& j, Network& net);

}  // namespace dlmp
