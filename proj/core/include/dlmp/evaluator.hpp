#pragma once

#include "dlmp/game.hpp"
#include "dlmp/policy.hpp"

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace dlmp {

struct EvalConfig {
  int n_rollouts = 50;
  int horizon = 500;
  double gamma = 0.99;
  double w = 0.75;
  std::uint64_t seed = 0;
  PolicyMode policy_mode = PolicyMode::Stochastic;
  int threads = 1;

  void validate() const;
  bool same_experiment(const EvalConfig& other) const;
};

struct RolloutStats {
  double welfare = 0.0;           // truncated discounted welfare under theta
  double baseline_welfare = 0.0;  // same streams, idle storage
  double adjusted = 0.0;          // welfare - baseline_welfare
  double v_min = 0.0;
  double v_max = 0.0;
  double mean_losses_fraction = 0.0;
  std::uint64_t xi_fingerprint = 0;
  std::uint64_t eta_fingerprint = 0;
};

struct EvalReport {
  EvalConfig config;
  std::vector<RolloutStats> rollouts;
  double mean_adjusted = 0.0;
  double gamma_pow_horizon = 0.0;  // weight of the first dropped term
  // Bound on the dropped tail: gamma^horizon / (1 - gamma) * max_t |welfare_t|.
  double tail_bound = 0.0;
  double max_stage_welfare = 0.0;

  std::vector<double> adjusted() const;
};

/// Discounted social welfare of theta minus that of idle storage, both on the
/// true network and on the same noise: rollout k draws everything from
/// substream (seed, k) regardless of theta.
EvalReport evaluate(const PolicyParams& params, const Game& game, const EvalConfig& cfg);

struct Spread {
  double mean = 0.0;
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
};

Spread spread(std::vector<double> values);

struct ComparisonRow {
  std::string label;
  Spread stats;
};

struct ComparisonGap {
  std::string higher;
  std::string lower;
  double gap = 0.0;  // mean(higher) - mean(lower)
};

struct ComparisonTable {
  std::vector<ComparisonRow> rows;
  std::vector<ComparisonGap> gaps;
  // (SO - EQ) / (EQ - UN), present when all three labels are compared.
  std::optional<double> price_of_anarchy_ratio;

  const ComparisonRow& row(const std::string& label) const;
};

struct LabeledReport {
  std::string label;
  EvalReport report;
};

/// Throws ArgumentError unless every report came from the same experiment.
ComparisonTable compare(const std::vector<LabeledReport>& reports);
ComparisonTable compare(const EvalReport& eq, const EvalReport& so, const EvalReport& un);

struct DemoConfig {
  int days = 4;
  double w = 0.75;
  std::uint64_t seed = 0;
};

struct DemoRecord {
  int t = 0;
  int agent = -1;  // -1 for system-wide series
  std::string series;
  double value = 0.0;
};

struct DemoTrace {
  std::vector<DemoRecord> records;
  std::vector<double> voltages;          // every node, every step
  std::vector<double> losses_fractions;  // per step
};

/// Deterministic (eta = 0) rollout of 24 * days hourly steps on the true
/// network with exogenous noise from substream (seed).
DemoTrace demo(const PolicyParams& params, const Game& game, const DemoConfig& cfg);

void write_eval_csv(std::ostream& out, const EvalReport& report, const std::string& header);
void write_comparison_csv(std::ostream& out, const ComparisonTable& table, const std::string& header);
void write_demo_csv(std::ostream& out, const DemoTrace& trace, const std::string& header);

}  // namespace dlmp
