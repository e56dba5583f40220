#include "dlmp/verify.hpp"

#include "dlmp/errors.hpp"
#include "dlmp/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <future>
#include <iomanip>
#include <numeric>
#include <sstream>

namespace dlmp {
namespace {

constexpr int kBurnIn = 24;

GameState sample_state(const Game& game, Rng& rng) {
  auto state = sample_initial_state(game, rng);
  for (int k = 0; k < kBurnIn; ++k) {
    state.exo = step(state.exo, sample_noise(game.exo_config(), game.n_nodes() + 1, rng), game.exo_config());
  }
  return state;
}

// Raw actions spread well past the feasible set so both kinks get exercised.
Eigen::Vector2d sample_action(const StorageSpec& spec, Rng& rng) {
  std::uniform_real_distribution<double> u(-1.5 * spec.b, 1.5 * spec.b);
  const double a_p = u(rng);
  return {a_p, u(rng)};
}

Eigen::MatrixXd sample_actions(const Game& game, Rng& rng) {
  Eigen::MatrixXd actions(game.n_agents(), 2);
  for (int i = 0; i < game.n_agents(); ++i) actions.row(i) = sample_action(game.specs()[i], rng).transpose();
  return actions;
}

double sample_soc(const StorageSpec& spec, Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, spec.d_max)(rng);
}

class FaultyPotential {
 public:
  FaultyPotential(const Game& game, PotentialFault fault) : fault_(fault), w_(game.w()) {
    if (fault == PotentialFault::PerturbImpedance) {
      Network net = game.network();
      for (auto& e : net.edges) {
        e.r *= 1.05;
        e.x *= 1.05;
      }
      perturbed_ = build_sensitivities(net);
    }
  }

  double operator()(const StageOutcome& out) const {
    switch (fault_) {
      case PotentialFault::None:
        return out.phi;
      case PotentialFault::DropSelfTerms:
        return out.welfare;
      case PotentialFault::PerturbImpedance:
        return out.utilities.sum() - potential_cost(out.p, out.q, out.prices.lambda, w_, perturbed_);
    }
    return out.phi;
  }

 private:
  PotentialFault fault_;
  double w_;
  Sensitivities perturbed_;
};

void finish(VerifyEntry& e) { e.pass = e.max_rel <= e.tolerance; }

}  // namespace

bool VerifyReport::all_pass() const {
  return std::all_of(entries.begin(), entries.end(), [](const VerifyEntry& e) { return e.pass; });
}

const VerifyEntry& VerifyReport::entry(const std::string& name) const {
  for (const auto& e : entries) {
    if (e.name == name) return e;
  }
  throw ArgumentError("no verify entry named " + name);
}

VerifyEntry check_stagewise(const Game& game, int n_samples, Rng& rng, PotentialFault fault) {
  if (n_samples < 1) throw ArgumentError("n_samples must be at least 1");
  VerifyEntry e{"stagewise_potential", n_samples, 0.0, 0.0, 1e-9, false, ""};
  if (game.n_agents() == 0) {
    e.pass = true;
    e.note = "no agents";
    return e;
  }
  const FaultyPotential phi(game, fault);
  const auto& sens = game.sensitivities();
  std::uniform_int_distribution<int> pick(0, game.n_agents() - 1);
  for (int s = 0; s < n_samples; ++s) {
    const auto state = sample_state(game, rng);
    const auto actions = sample_actions(game, rng);
    const int i = pick(rng);
    auto state2 = state;
    auto actions2 = actions;
    state2.fleet.d(i) = sample_soc(game.specs()[i], rng);
    actions2.row(i) = sample_action(game.specs()[i], rng).transpose();

    const auto before = stage(game, state, actions, sens);
    const auto after = stage(game, state2, actions2, sens);
    const double d_reward = after.rewards(i) - before.rewards(i);
    const double d_phi = phi(after) - phi(before);
    const double err = std::abs(d_reward - d_phi);
    e.max_abs = std::max(e.max_abs, err);
    e.max_rel = std::max(e.max_rel, err / std::max(1.0, std::abs(d_phi)));
  }
  if (fault != PotentialFault::None) e.note = "fault injected";
  finish(e);
  return e;
}

VerifyEntry check_partition_lemma(int n_samples, int max_dim, Rng& rng) {
  if (n_samples < 1) throw ArgumentError("n_samples must be at least 1");
  if (max_dim < 2) throw ArgumentError("max_dim must be at least 2");
  VerifyEntry e{"quadratic_partition_lemma", n_samples, 0.0, 0.0, 1e-10, false, ""};
  std::normal_distribution<double> normal;
  std::uniform_int_distribution<int> dim(2, max_dim);

  auto record = [&e](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    for (Eigen::Index k = 0; k < a.size(); ++k) {
      const double err = std::abs(a(k) - b(k));
      e.max_abs = std::max(e.max_abs, err);
      e.max_rel = std::max(e.max_rel, err / std::max(1.0, std::abs(b(k))));
    }
  };

  for (int s = 0; s < n_samples; ++s) {
    const int l = dim(rng);
    Eigen::VectorXd v(l);
    Eigen::MatrixXd Q(l, l);
    for (auto& x : v) x = normal(rng);
    for (auto& x : Q.reshaped()) x = normal(rng);

    // Random partition: each index joins one of up to l blocks.
    std::uniform_int_distribution<int> block(0, std::uniform_int_distribution<int>(1, l)(rng) - 1);
    std::vector<std::vector<int>> parts;
    {
      std::vector<int> label(l);
      int n_blocks = 0;
      for (auto& b : label) {
        b = block(rng);
        n_blocks = std::max(n_blocks, b + 1);
      }
      parts.resize(n_blocks);
      for (int k = 0; k < l; ++k) parts[label[k]].push_back(k);
      parts.erase(std::remove_if(parts.begin(), parts.end(), [](const auto& p) { return p.empty(); }), parts.end());
    }

    auto selector = [l](const std::vector<int>& idx) {
      Eigen::MatrixXd E = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(idx.size()), l);
      for (std::size_t r = 0; r < idx.size(); ++r) E(static_cast<Eigen::Index>(r), idx[r]) = 1.0;
      return E;
    };
    const Eigen::MatrixXd S = Q + Q.transpose();
    Eigen::MatrixXd block_sum = Eigen::MatrixXd::Zero(l, l);
    for (const auto& p : parts) {
      const auto E = selector(p);
      block_sum += E.transpose() * E * S * E.transpose() * E;
    }

    // Scalar forms whose gradients the identity relates.
    auto rhs_scalar = [&Q, &parts](const Eigen::VectorXd& x) {
      double f = x.dot(Q * x);
      for (const auto& p : parts) {
        for (int a : p) {
          for (int b : p) f += x(a) * Q(a, b) * x(b);
        }
      }
      return f;
    };

    for (const auto& p : parts) {
      const auto E = selector(p);
      const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(l, l);
      const Eigen::VectorXd lhs = E * S * (I + E.transpose() * E) * v;
      const Eigen::VectorXd rhs = E * (S + block_sum) * v;
      record(lhs, rhs);

      // v_i^T grad_{v_i}(v^T Q v), differentiated in v_i by central differences;
      // the forms are quadratic, so a unit step is exact up to rounding.
      auto lhs_scalar = [&E, &S](const Eigen::VectorXd& x) { return (E * x).dot(E * S * x); };
      Eigen::VectorXd lhs_fd(static_cast<Eigen::Index>(p.size()));
      Eigen::VectorXd rhs_fd(static_cast<Eigen::Index>(p.size()));
      for (std::size_t r = 0; r < p.size(); ++r) {
        Eigen::VectorXd hi = v;
        Eigen::VectorXd lo = v;
        hi(p[r]) += 1.0;
        lo(p[r]) -= 1.0;
        lhs_fd(static_cast<Eigen::Index>(r)) = 0.5 * (lhs_scalar(hi) - lhs_scalar(lo));
        rhs_fd(static_cast<Eigen::Index>(r)) = 0.5 * (rhs_scalar(hi) - rhs_scalar(lo));
      }
      record(lhs, lhs_fd);
      record(rhs, rhs_fd);
      record(lhs_fd, rhs_fd);
    }
  }
  finish(e);
  return e;
}

VerifyEntry check_transition_independence(const Game& game, int n_samples, Rng& rng, const TransitionFn& fn) {
  if (n_samples < 1) throw ArgumentError("n_samples must be at least 1");
  const TransitionFn next = fn ? fn : TransitionFn(transition);
  VerifyEntry e{"transition_independence", n_samples, 0.0, 0.0, 0.0, false, "exact equality required"};
  if (game.n_agents() < 2) {
    e.pass = true;
    e.samples = 0;
    e.note = "fewer than two agents; vacuous";
    return e;
  }
  auto record = [&e](double a, double b) {
    const double err = std::abs(a - b);
    // Bitwise comparison; NaN or signed-zero differences count as failures.
    const bool same = std::memcmp(&a, &b, sizeof(double)) == 0;
    if (!same) {
      e.max_abs = std::max(e.max_abs, std::isfinite(err) && err > 0 ? err : 1.0);
      e.max_rel = std::max(e.max_rel, std::isfinite(err) && err > 0 ? err / std::max(1.0, std::abs(b)) : 1.0);
    }
  };
  for (int s = 0; s < n_samples; ++s) {
    const auto state = sample_state(game, rng);
    const auto actions = sample_actions(game, rng);
    const auto xi = sample_noise(game.exo_config(), game.n_nodes() + 1, rng);
    const auto base = next(game, state, actions, xi);
    for (int i = 0; i < game.n_agents(); ++i) {
      auto state2 = state;
      auto actions2 = actions;
      state2.fleet.d(i) = sample_soc(game.specs()[i], rng);
      actions2.row(i) = sample_action(game.specs()[i], rng).transpose();
      const auto moved = next(game, state2, actions2, xi);
      for (int j = 0; j < game.n_agents(); ++j) {
        if (j != i) record(moved.fleet.d(j), base.fleet.d(j));
      }
      for (Eigen::Index k = 0; k < base.exo.alpha.size(); ++k) {
        record(moved.exo.alpha.reshaped()(k), base.exo.alpha.reshaped()(k));
      }
    }
  }
  e.samples = n_samples * game.n_agents();
  finish(e);
  return e;
}

GameState coupled_transition(const Game& game, const GameState& state, const Eigen::MatrixXd& actions,
                             const Eigen::VectorXd& xi) {
  auto next = transition(game, state, actions, xi);
  if (game.n_agents() >= 2) {
    const auto& spec = game.specs()[1];
    next.fleet.d(1) = std::clamp(next.fleet.d(1) + 1e-3 * state.fleet.d(0), 0.0, spec.d_max);
  }
  return next;
}

VerifyEntry check_projection_feasibility(const Game& game, int n_samples, Rng& rng) {
  if (n_samples < 1) throw ArgumentError("n_samples must be at least 1");
  VerifyEntry e{"projection_feasibility", n_samples, 0.0, 0.0, 1e-12, false, "violation relative to max(1, scale)"};
  if (game.n_agents() == 0) {
    e.pass = true;
    e.note = "no agents";
    return e;
  }
  std::uniform_int_distribution<int> pick(0, game.n_agents() - 1);
  for (int s = 0; s < n_samples; ++s) {
    const auto& spec = game.specs()[pick(rng)];
    const double d = sample_soc(spec, rng);
    const auto a = sample_action(spec, rng);
    const auto proj = project(a(0), a(1), d, spec);
    const double violation = std::max({0.0, std::hypot(proj.p, proj.q) - spec.b, -(d + proj.p),
                                       d + proj.p - spec.d_max});
    const double scale = std::max({1.0, spec.b, spec.d_max});
    e.max_abs = std::max(e.max_abs, violation);
    e.max_rel = std::max(e.max_rel, violation / scale);
  }
  finish(e);
  return e;
}

VerifyEntry policy_locality_entry() {
  return {"policy_locality", 0,  0.0, 0.0, 0.0, true,
          "structural: agent i's policy reads only (d_i, alpha_i, alpha_0, eta_i)"};
}

VerifyReport run_verify(const Game& game, const VerifyOptions& options) {
  using Check = std::function<VerifyEntry()>;
  const std::vector<Check> checks = {
      [&] {
        auto rng = substream(options.seed, StreamTag::Verify, {1});
        return check_stagewise(game, options.stagewise_samples, rng, options.fault);
      },
      [&] {
        auto rng = substream(options.seed, StreamTag::Verify, {2});
        return check_partition_lemma(options.lemma_samples, options.lemma_max_dim, rng);
      },
      [&] {
        auto rng = substream(options.seed, StreamTag::Verify, {3});
        return check_transition_independence(game, options.transition_samples, rng, options.transition);
      },
      [&] {
        auto rng = substream(options.seed, StreamTag::Verify, {4});
        return check_projection_feasibility(game, options.projection_samples, rng);
      },
      [] { return policy_locality_entry(); },
  };
  VerifyReport report;
  if (options.threads > 1) {
    std::vector<std::future<VerifyEntry>> pending;
    for (const auto& c : checks) pending.push_back(std::async(std::launch::async, c));
    for (auto& f : pending) report.entries.push_back(f.get());
  } else {
    for (const auto& c : checks) report.entries.push_back(c());
  }
  return report;
}

void to_json(nlohmann::json& j, const VerifyEntry& e) {
  j = {{"name", e.name},       {"samples", e.samples}, {"max_abs", e.max_abs}, {"max_rel", e.max_rel},
       {"tolerance", e.tolerance}, {"pass", e.pass},       {"note", e.note}};
}

void to_json(nlohmann::json& j, const VerifyReport& r) {
  j = {{"pass", r.all_pass()}, {"checks", r.entries}};
}

std::string format_table(const VerifyReport& report) {
  std::ostringstream out;
  out << std::left << std::setw(28) << "check" << std::right << std::setw(9) << "samples" << std::setw(13)
      << "max_abs" << std::setw(13) << "max_rel" << std::setw(11) << "tol" << "  result\n";
  for (const auto& e : report.entries) {
    out << std::left << std::setw(28) << e.name << std::right << std::setw(9) << e.samples << std::scientific
        << std::setprecision(3) << std::setw(13) << e.max_abs << std::setw(13) << e.max_rel << std::setw(11)
        << e.tolerance << std::defaultfloat << "  " << (e.pass ? "PASS" : "FAIL");
    if (!e.note.empty()) out << "  (" << e.note << ")";
    out << '\n';
  }
  return out.str();
}

}  // namespace dlmp
