#pragma once

#include "dlmp/game.hpp"
#include "dlmp/random.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace dlmp {

struct VerifyEntry {
  std::string name;
  int samples = 0;
  double max_abs = 0.0;
  double max_rel = 0.0;
  double tolerance = 0.0;
  bool pass = false;  // max_rel <= tolerance
  std::string note;
};

struct VerifyReport {
  std::vector<VerifyEntry> entries;

  bool all_pass() const;
  const VerifyEntry& entry(const std::string& name) const;
};

/// Deliberately broken potentials, used to show the stagewise check can fail.
enum class PotentialFault {
  None,
  DropSelfTerms,     // phi = sum u - C
  PerturbImpedance,  // C~ evaluated with r and x scaled by 1.05
};

/// Random state (with exogenous burn-in), raw actions, agent i and a
/// replacement (d_i, a_i); compares the change in U_i to the change in phi.
/// Error per sample is |dU_i - dphi| / max(1, |dphi|).
VerifyEntry check_stagewise(const Game& game, int n_samples, Rng& rng, PotentialFault fault = PotentialFault::None);

/// Both sides of the quadratic partition identity, analytically and by
/// central differences, on random (v, Q, partition) with 2 <= l <= max_dim.
VerifyEntry check_partition_lemma(int n_samples, int max_dim, Rng& rng);

using TransitionFn =
    std::function<GameState(const Game&, const GameState&, const Eigen::MatrixXd&, const Eigen::VectorXd&)>;

/// Perturbs (d_i, a_i) under fixed noise and requires the next (d_{-i}, alpha)
/// to be bitwise unchanged. `fn` defaults to the game transition.
VerifyEntry check_transition_independence(const Game& game, int n_samples, Rng& rng, const TransitionFn& fn = {});

/// Broken dynamics for fault injection: agent 0's state of charge leaks into
/// agent 1's update.
GameState coupled_transition(const Game& game, const GameState& state, const Eigen::MatrixXd& actions,
                             const Eigen::VectorXd& xi);

/// Projected set-points stay inside the inverter disc and keep the state of
/// charge in [0, d_max].
VerifyEntry check_projection_feasibility(const Game& game, int n_samples, Rng& rng);

/// Policies only read (d_i, alpha_i, alpha_0); recorded, not sampled.
VerifyEntry policy_locality_entry();

struct VerifyOptions {
  int stagewise_samples = 1000;
  int lemma_samples = 100;
  int lemma_max_dim = 8;
  int transition_samples = 200;
  int projection_samples = 100000;
  std::uint64_t seed = 0;
  PotentialFault fault = PotentialFault::None;
  TransitionFn transition;  // empty: the game transition
  int threads = 1;
};

/// Every check, each on its own substream of `seed`.
VerifyReport run_verify(const Game& game, const VerifyOptions& options);

void to_json(nlohmann::json& j, const VerifyEntry& e);
void to_json(nlohmann::json& j, const VerifyReport& r);
std::string format_table(const VerifyReport& report);

}  // namespace dlmp
