#include "dlmp/evaluator.hpp"

#include "dlmp/errors.hpp"
#include "dlmp/gradient.hpp"
#include "dlmp/trainer.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <future>
#include <numeric>

namespace dlmp {
namespace {

std::string num(double value) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return ec == std::errc{} ? std::string(buf, ptr) : std::string("nan");
}

std::string policy_mode_name(PolicyMode mode) {
  return mode == PolicyMode::Stochastic ? "stochastic" : "deterministic";
}

struct PathStats {
  double discounted_welfare = 0.0;
  double max_abs_welfare = 0.0;
  double v_min = 0.0;
  double v_max = 0.0;
  double losses_fraction_sum = 0.0;
};

// Runs `horizon` stages on the true network and accumulates discounted welfare.
PathStats run_path(const Game& game, const PolicyParams& params, const GameState& s0, const NoiseStreams& noise,
                   int horizon, double gamma, PolicyMode mode) {
  PathStats stats;
  stats.v_min = std::numeric_limits<double>::infinity();
  stats.v_max = -std::numeric_limits<double>::infinity();
  GameState state = s0;
  double discount = 1.0;
  for (int t = 0; t < horizon; ++t) {
    const auto actions = joint_action(params, game, state, noise.eta[t], mode);
    const auto outcome = stage(game, state, actions, game.sensitivities());
    stats.discounted_welfare += discount * outcome.welfare;
    stats.max_abs_welfare = std::max(stats.max_abs_welfare, std::abs(outcome.welfare));
    stats.v_min = std::min(stats.v_min, outcome.flows.v.minCoeff());
    stats.v_max = std::max(stats.v_max, outcome.flows.v.maxCoeff());
    stats.losses_fraction_sum += losses_fraction(outcome.flows, outcome.p);
    discount *= gamma;
    if (t + 1 < horizon) state = transition(game, state, actions, noise.xi[t]);
  }
  return stats;
}

RolloutStats evaluate_rollout(const PolicyParams& params, const PolicyParams& idle, const Game& game,
                              const EvalConfig& cfg, int k) {
  // Everything random is drawn before any policy runs, from (seed, k) only.
  auto rng = substream(cfg.seed, StreamTag::Eval, {static_cast<std::uint64_t>(k)});
  const auto s0 = sample_initial_state(game, rng);
  const auto noise = sample_streams(game, cfg.horizon, rng);

  RolloutStats out;
  Fingerprint xi_print;
  Fingerprint eta_print;
  for (const auto& xi : noise.xi) {
    for (double v : xi) xi_print.add(v);
  }
  for (const auto& eta : noise.eta) {
    for (double v : eta.reshaped()) eta_print.add(v);
  }
  out.xi_fingerprint = xi_print.value();
  out.eta_fingerprint = eta_print.value();

  const auto policy = run_path(game, params, s0, noise, cfg.horizon, cfg.gamma, cfg.policy_mode);
  const auto baseline = run_path(game, idle, s0, noise, cfg.horizon, cfg.gamma, PolicyMode::Deterministic);
  out.welfare = policy.discounted_welfare;
  out.baseline_welfare = baseline.discounted_welfare;
  out.adjusted = policy.discounted_welfare - baseline.discounted_welfare;
  out.v_min = policy.v_min;
  out.v_max = policy.v_max;
  out.mean_losses_fraction = policy.losses_fraction_sum / cfg.horizon;
  return out;
}

double quantile(const std::vector<double>& sorted, double fraction) {
  if (sorted.size() == 1) return sorted.front();
  const double pos = fraction * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

void EvalConfig::validate() const {
  if (n_rollouts < 1) throw ArgumentError("eval.n_rollouts must be at least 1");
  if (horizon < 1) throw ArgumentError("eval.horizon must be at least 1");
  if (!(gamma > 0.0 && gamma < 1.0)) throw ArgumentError("eval.gamma must lie in (0, 1)");
  if (!(w >= 0.0 && w <= 1.0)) throw ArgumentError("eval.w must lie in [0, 1]");
  if (threads < 1) throw ArgumentError("threads must be at least 1");
}

bool EvalConfig::same_experiment(const EvalConfig& other) const {
  return n_rollouts == other.n_rollouts && horizon == other.horizon && gamma == other.gamma && w == other.w &&
         seed == other.seed && policy_mode == other.policy_mode;
}

std::vector<double> EvalReport::adjusted() const {
  std::vector<double> out;
  out.reserve(rollouts.size());
  for (const auto& r : rollouts) out.push_back(r.adjusted);
  return out;
}

EvalReport evaluate(const PolicyParams& params, const Game& base_game, const EvalConfig& cfg) {
  cfg.validate();
  const Game game = base_game.with_weight(cfg.w);
  if (params.layout != game.layout()) {
    throw ArgumentError("policy layout (" + std::to_string(params.layout.n_agents) + " agents, tau " +
                        std::to_string(params.layout.tau) + ") does not match the game (" +
                        std::to_string(game.n_agents()) + " agents, tau " + std::to_string(game.exo_config().tau) +
                        ")");
  }
  const auto idle = init_params(game.n_agents(), game.exo_config().tau);

  EvalReport report;
  report.config = cfg;
  report.rollouts.resize(cfg.n_rollouts);
  if (cfg.threads > 1) {
    for (int start = 0; start < cfg.n_rollouts; start += cfg.threads) {
      const int stop = std::min(cfg.n_rollouts, start + cfg.threads);
      std::vector<std::future<RolloutStats>> pending;
      for (int k = start; k < stop; ++k) {
        pending.push_back(std::async(std::launch::async, evaluate_rollout, std::cref(params), std::cref(idle),
                                     std::cref(game), std::cref(cfg), k));
      }
      for (int k = start; k < stop; ++k) report.rollouts[k] = pending[k - start].get();
    }
  } else {
    for (int k = 0; k < cfg.n_rollouts; ++k) report.rollouts[k] = evaluate_rollout(params, idle, game, cfg, k);
  }

  double sum = 0.0;
  for (const auto& r : report.rollouts) sum += r.adjusted;
  report.mean_adjusted = sum / cfg.n_rollouts;
  report.gamma_pow_horizon = std::pow(cfg.gamma, cfg.horizon);

  // Per-stage welfare bound from the largest magnitude seen on either path.
  double bound = 0.0;
  for (int k = 0; k < cfg.n_rollouts; ++k) {
    bound = std::max({bound, std::abs(report.rollouts[k].welfare), std::abs(report.rollouts[k].baseline_welfare)});
  }
  // |discounted sum| <= max_t |w_t| / (1 - gamma), so max_t |w_t| >= (1 - gamma) |sum|.
  report.max_stage_welfare = bound * (1.0 - cfg.gamma) / (1.0 - report.gamma_pow_horizon);
  report.tail_bound = report.gamma_pow_horizon / (1.0 - cfg.gamma) * report.max_stage_welfare;
  return report;
}

Spread spread(std::vector<double> values) {
  if (values.empty()) throw ArgumentError("cannot summarise an empty sample");
  std::sort(values.begin(), values.end());
  Spread s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  s.min = values.front();
  s.max = values.back();
  s.q1 = quantile(values, 0.25);
  s.median = quantile(values, 0.5);
  s.q3 = quantile(values, 0.75);
  return s;
}

const ComparisonRow& ComparisonTable::row(const std::string& label) const {
  for (const auto& r : rows) {
    if (r.label == label) return r;
  }
  throw ArgumentError("no comparison row labelled " + label);
}

ComparisonTable compare(const std::vector<LabeledReport>& reports) {
  if (reports.empty()) throw ArgumentError("nothing to compare");
  for (const auto& r : reports) {
    if (!r.report.config.same_experiment(reports.front().report.config)) {
      throw ArgumentError("report '" + r.label + "' was produced with a different evaluation config");
    }
    if (r.report.rollouts.size() != reports.front().report.rollouts.size()) {
      throw ArgumentError("report '" + r.label + "' has a different rollout count");
    }
  }
  ComparisonTable table;
  for (const auto& r : reports) table.rows.push_back({r.label, spread(r.report.adjusted())});
  for (std::size_t a = 0; a < table.rows.size(); ++a) {
    for (std::size_t b = a + 1; b < table.rows.size(); ++b) {
      table.gaps.push_back({table.rows[a].label, table.rows[b].label,
                            table.rows[a].stats.mean - table.rows[b].stats.mean});
    }
  }
  auto find = [&table](const std::string& label) -> const ComparisonRow* {
    for (const auto& r : table.rows) {
      if (r.label == label) return &r;
    }
    return nullptr;
  };
  const auto* eq = find("EQ");
  const auto* so = find("SO");
  const auto* un = find("UN");
  if (eq && so && un) {
    const double denom = eq->stats.mean - un->stats.mean;
    const double numer = so->stats.mean - eq->stats.mean;
    table.price_of_anarchy_ratio = denom != 0.0 ? numer / denom : (numer == 0.0 ? 0.0 : HUGE_VAL);
  }
  return table;
}

ComparisonTable compare(const EvalReport& eq, const EvalReport& so, const EvalReport& un) {
  return compare({{"EQ", eq}, {"SO", so}, {"UN", un}});
}

DemoTrace demo(const PolicyParams& params, const Game& base_game, const DemoConfig& cfg) {
  if (cfg.days < 1) throw ArgumentError("demo needs at least one day");
  const Game game = base_game.with_weight(cfg.w);
  if (params.layout != game.layout()) throw ArgumentError("policy layout does not match the game");
  const int steps = 24 * cfg.days;
  auto rng = substream(cfg.seed, StreamTag::Demo);
  GameState state = sample_initial_state(game, rng);
  const auto noise = sample_streams(game, steps, rng);
  const Eigen::MatrixXd no_noise = Eigen::MatrixXd::Zero(game.n_agents(), 2);

  DemoTrace trace;
  const double v0 = game.sensitivities().v0;
  for (int t = 0; t < steps; ++t) {
    const auto actions = joint_action(params, game, state, no_noise, PolicyMode::Deterministic);
    const auto out = stage(game, state, actions, game.sensitivities());
    const double fraction = losses_fraction(out.flows, out.p);
    for (int i = 0; i < game.n_agents(); ++i) {
      const int k = game.agent_index()[i];
      trace.records.push_back({t, i, "pbar", out.pbar(k)});
      trace.records.push_back({t, i, "qbar", out.qbar(k)});
      trace.records.push_back({t, i, "p_storage", out.p_storage(i)});
      trace.records.push_back({t, i, "q_storage", out.q_storage(i)});
      trace.records.push_back({t, i, "soc", state.fleet.d(i)});
      trace.records.push_back({t, i, "mu_p", out.prices.mu_p(k)});
      trace.records.push_back({t, i, "mu_q", out.prices.mu_q(k)});
      trace.records.push_back({t, i, "voltage", out.flows.v(k)});
    }
    trace.records.push_back({t, -1, "lmp", out.prices.lambda});
    trace.records.push_back({t, -1, "v_min", out.flows.v.minCoeff()});
    trace.records.push_back({t, -1, "v_max", out.flows.v.maxCoeff()});
    trace.records.push_back({t, -1, "max_voltage_deviation", (out.flows.v.array() - v0).abs().maxCoeff()});
    trace.records.push_back({t, -1, "losses", out.flows.losses});
    trace.records.push_back({t, -1, "losses_fraction", fraction});
    for (double v : out.flows.v) trace.voltages.push_back(v);
    trace.losses_fractions.push_back(fraction);
    if (t + 1 < steps) state = transition(game, state, actions, noise.xi[t]);
  }
  return trace;
}

void write_eval_csv(std::ostream& out, const EvalReport& report, const std::string& header) {
  out << "# " << header << " n_rollouts=" << report.config.n_rollouts << " horizon=" << report.config.horizon
      << " gamma=" << num(report.config.gamma) << " w=" << num(report.config.w) << " seed=" << report.config.seed
      << " policy_mode=" << policy_mode_name(report.config.policy_mode)
      << " gamma_pow_horizon=" << num(report.gamma_pow_horizon) << " tail_bound=" << num(report.tail_bound)
      << " mean_adjusted=" << num(report.mean_adjusted) << '\n';
  out << "rollout,adjusted_welfare,welfare,baseline_welfare,v_min,v_max,mean_losses_fraction,xi_fingerprint,"
         "eta_fingerprint\n";
  for (std::size_t k = 0; k < report.rollouts.size(); ++k) {
    const auto& r = report.rollouts[k];
    out << k << ',' << num(r.adjusted) << ',' << num(r.welfare) << ',' << num(r.baseline_welfare) << ','
        << num(r.v_min) << ',' << num(r.v_max) << ',' << num(r.mean_losses_fraction) << ',' << r.xi_fingerprint
        << ',' << r.eta_fingerprint << '\n';
  }
}

void write_comparison_csv(std::ostream& out, const ComparisonTable& table, const std::string& header) {
  out << "# " << header << '\n';
  out << "kind,label,mean,min,q1,median,q3,max\n";
  for (const auto& r : table.rows) {
    out << "policy," << r.label << ',' << num(r.stats.mean) << ',' << num(r.stats.min) << ',' << num(r.stats.q1)
        << ',' << num(r.stats.median) << ',' << num(r.stats.q3) << ',' << num(r.stats.max) << '\n';
  }
  for (const auto& g : table.gaps) {
    out << "gap," << g.higher << '-' << g.lower << ',' << num(g.gap) << ",,,,,\n";
  }
  if (table.price_of_anarchy_ratio) {
    out << "poa_ratio,(SO-EQ)/(EQ-UN)," << num(*table.price_of_anarchy_ratio) << ",,,,,\n";
  }
}

void write_demo_csv(std::ostream& out, const DemoTrace& trace, const std::string& header) {
  out << "# " << header << '\n';
  out << "t,agent,series,value\n";
  for (const auto& r : trace.records) {
    out << r.t << ',' << r.agent << ',' << r.series << ',' << num(r.value) << '\n';
  }
}

}  // namespace dlmp
