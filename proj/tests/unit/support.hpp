#pragma once

#include "dlmp/game.hpp"
#include "dlmp/netmodel.hpp"
#include "dlmp/random.hpp"

#include <cmath>
#include <random>
#include <string>

namespace dlmp::test {

inline std::string case18_path() { return std::string(DLMP_TEST_DATA_DIR) + "/case18.m"; }

inline Network single_line(double r = 0.1, double x = 0.2) {
  Network net;
  net.node_count = 1;
  net.edges = {{0, 1, r, x}};
  net.nominal_load = {{1.0, 0.5}};
  return net;
}

// 0 -> 1 -> 2 with r = (0.1, 0.2), x = 0.
inline Network two_series() {
  Network net;
  net.node_count = 2;
  net.edges = {{0, 1, 0.1, 0.0}, {1, 2, 0.2, 0.0}};
  net.nominal_load = {{0.5, 0.2}, {0.4, 0.1}};
  return net;
}

// Random tree: node k attaches to a uniformly chosen earlier node.
inline Network random_tree(int n, Rng& rng, double load_scale = 1.0) {
  std::uniform_real_distribution<double> imp(0.01, 0.2);
  std::uniform_real_distribution<double> load(0.05, 0.5);
  Network net;
  net.node_count = n;
  for (int k = 1; k <= n; ++k) {
    const int parent = std::uniform_int_distribution<int>(0, k - 1)(rng);
    const double r = imp(rng);
    net.edges.push_back({parent, k, r, imp(rng)});
  }
  for (int k = 0; k < n; ++k) {
    const double p = load(rng) * load_scale;
    net.nominal_load.push_back({p, 0.5 * p});
  }
  return net;
}

inline Eigen::VectorXd random_vector(int n, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::VectorXd v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

inline Network case18_tripled() { return scale_loads(load_case_file(case18_path()), 3.0); }

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace dlmp::test
