// dlmp: train, evaluate, demo and verify storage policies under nodal pricing.

#include "dlmp/config.hpp"
#include "dlmp/errors.hpp"
#include "dlmp/evaluator.hpp"
#include "dlmp/netmodel.hpp"
#include "dlmp/powerflow.hpp"
#include "dlmp/trainer.hpp"
#include "dlmp/verify.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kCheckFailed = 1;
constexpr int kUsage = 2;

std::string shortest(double value) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ec == std::errc{} ? ptr : buf);
}

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

struct Common {
  std::string config_path;
  int threads = 1;
  bool deterministic = false;
  std::string output_dir;

  int effective_threads() const { return deterministic ? 1 : threads; }
};

dlmp::RunConfig load(const Common& common) {
  auto cfg = dlmp::load_run_config(common.config_path);
  if (!common.output_dir.empty()) cfg.output_dir = common.output_dir;
  cfg.validate();
  return cfg;
}

std::ofstream open_output(const fs::path& path) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw dlmp::ConfigError("cannot write " + path.string());
  return out;
}

std::string header_line(const char* command, const dlmp::RunConfig& cfg, std::uint64_t seed,
                        const std::string& extra = {}) {
  std::string line = std::string("dlmp ") + command + " config_hash=" + dlmp::config_hash(cfg) +
                     " seed=" + std::to_string(seed);
  if (!extra.empty()) line += " " + extra;
  return line;
}

struct PolicyFile {
  dlmp::PolicyParams params;
  json meta;
};

PolicyFile read_policy(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw dlmp::ConfigError("cannot open policy file: " + path);
  try {
    const auto doc = json::parse(in);
    return {doc.get<dlmp::PolicyParams>(), doc.value("meta", json::object())};
  } catch (const json::exception& e) {
    throw dlmp::ConfigError("policy file " + path + " is malformed: " + e.what());
  }
}

std::string policy_stem(const std::string& path) {
  std::string name = fs::path(path).filename().string();
  for (const char* suffix : {".policy.json", ".json"}) {
    const std::string s(suffix);
    if (name.size() > s.size() && name.compare(name.size() - s.size(), s.size(), s) == 0) {
      return name.substr(0, name.size() - s.size());
    }
  }
  return name;
}

// ---- train ----

struct TrainArgs {
  std::optional<std::string> mode;
  std::optional<double> w;
  std::optional<std::uint64_t> seed;
  std::optional<int> n_train;
};

int cmd_train(const Common& common, const TrainArgs& args) {
  auto cfg = load(common);
  auto tc = cfg.train;
  if (args.mode) tc.mode = dlmp::parse_reward_mode(*args.mode);
  if (args.w) tc.w = *args.w;
  if (args.seed) tc.seed = *args.seed;
  if (args.n_train) tc.n_train = *args.n_train;
  tc.threads = common.effective_threads();
  cfg.train = tc;
  tc.validate();

  const auto game = dlmp::build_game(cfg, tc.w);
  const bool zero_impedance = tc.mode == dlmp::RewardMode::UN;
  const std::string stem =
      lower(dlmp::to_string(tc.mode)) + "_w" + shortest(tc.w) + "_s" + std::to_string(tc.seed);

  const auto result = dlmp::train(game, tc);

  const std::string extra = "mode=" + dlmp::to_string(tc.mode) + " w=" + shortest(tc.w) +
                            " zero_impedance=" + (zero_impedance ? "true" : "false");
  const fs::path csv_path = cfg.output_dir / (stem + ".train.csv");
  {
    auto out = open_output(csv_path);
    out << "# " << header_line("train", cfg, tc.seed, extra) << '\n';
    out << "iteration,value,grad_norm,theta_norm,horizon\n";
    for (const auto& r : result.log.records) {
      out << r.iteration << ',' << shortest(r.value) << ',' << shortest(r.grad_norm) << ','
          << shortest(r.theta_norm) << ',' << r.horizon << '\n';
    }
  }
  const fs::path policy_path = cfg.output_dir / (stem + ".policy.json");
  fs::create_directories(cfg.output_dir);
  dlmp::save_policy(result.params, policy_path.string(),
                    json{{"config_hash", dlmp::config_hash(cfg)},
                         {"seed", tc.seed},
                         {"mode", dlmp::to_string(tc.mode)},
                         {"w", tc.w},
                         {"zero_impedance", zero_impedance},
                         {"n_train", tc.n_train}});

  std::cout << "final moving average (100 iterations): " << shortest(result.log.moving_average(100)) << '\n'
            << "wrote " << policy_path.string() << '\n'
            << "wrote " << csv_path.string() << '\n';
  return kOk;
}

// ---- eval ----

struct EvalArgs {
  std::vector<std::string> policies;
  std::vector<std::string> labels;
  std::optional<std::uint64_t> seed;
  std::optional<double> w;
  std::optional<std::string> policy_mode;
};

int cmd_eval(const Common& common, const EvalArgs& args) {
  auto cfg = load(common);
  auto ec = cfg.eval;
  if (args.seed) ec.seed = *args.seed;
  if (args.w) ec.w = *args.w;
  if (args.policy_mode) {
    if (*args.policy_mode == "stochastic") {
      ec.policy_mode = dlmp::PolicyMode::Stochastic;
    } else if (*args.policy_mode == "deterministic") {
      ec.policy_mode = dlmp::PolicyMode::Deterministic;
    } else {
      throw dlmp::ConfigError("--policy-mode must be stochastic or deterministic");
    }
  }
  ec.threads = common.effective_threads();
  cfg.eval = ec;
  ec.validate();
  if (!args.labels.empty() && args.labels.size() != args.policies.size()) {
    throw dlmp::ConfigError("--labels needs one label per --policy");
  }

  const auto game = dlmp::build_game(cfg, ec.w);
  std::vector<dlmp::LabeledReport> reports;
  for (std::size_t k = 0; k < args.policies.size(); ++k) {
    const auto file = read_policy(args.policies[k]);
    std::string label = !args.labels.empty()           ? args.labels[k]
                        : file.meta.contains("mode") ? file.meta["mode"].get<std::string>()
                                                       : policy_stem(args.policies[k]);
    if (file.params.layout != game.layout()) {
      throw dlmp::ConfigError("policy " + args.policies[k] + " has " + std::to_string(file.params.layout.n_agents) +
                              " agents and tau " + std::to_string(file.params.layout.tau) + "; the config has " +
                              std::to_string(game.n_agents()) + " agents and tau " +
                              std::to_string(game.exo_config().tau));
    }
    auto report = dlmp::evaluate(file.params, game, ec);
    const fs::path path = cfg.output_dir / (label + "_s" + std::to_string(ec.seed) + ".eval.csv");
    auto out = open_output(path);
    dlmp::write_eval_csv(out, report,
                         header_line("eval", cfg, ec.seed, "label=" + label + " policy=" + policy_stem(args.policies[k])));
    std::cout << label << ": mean adjusted welfare " << shortest(report.mean_adjusted) << " (tail bound "
              << shortest(report.tail_bound) << ")\n";
    reports.push_back({label, std::move(report)});
  }
  if (reports.size() >= 2) {
    const auto table = dlmp::compare(reports);
    const fs::path path = cfg.output_dir / ("comparison_s" + std::to_string(ec.seed) + ".csv");
    auto out = open_output(path);
    dlmp::write_comparison_csv(out, table, header_line("eval", cfg, ec.seed));
    for (const auto& g : table.gaps) std::cout << g.higher << " - " << g.lower << ": " << shortest(g.gap) << '\n';
    if (table.price_of_anarchy_ratio) {
      std::cout << "(SO - EQ) / (EQ - UN): " << shortest(*table.price_of_anarchy_ratio) << '\n';
    }
    std::cout << "wrote " << path.string() << '\n';
  }
  return kOk;
}

// ---- demo ----

struct DemoArgs {
  std::string policy;
  int days = 4;
  std::optional<double> w;
  std::optional<std::uint64_t> seed;
};

int cmd_demo(const Common& common, const DemoArgs& args) {
  auto cfg = load(common);
  dlmp::DemoConfig dc;
  dc.days = args.days;
  dc.w = args.w.value_or(cfg.eval.w);
  dc.seed = args.seed.value_or(cfg.eval.seed);
  const auto game = dlmp::build_game(cfg, dc.w);
  const auto file = read_policy(args.policy);
  if (file.params.layout != game.layout()) {
    throw dlmp::ConfigError("policy " + args.policy + " does not match the configured network");
  }
  const auto trace = dlmp::demo(file.params, game, dc);
  const fs::path path = cfg.output_dir / (policy_stem(args.policy) + ".demo.csv");
  auto out = open_output(path);
  dlmp::write_demo_csv(out, trace,
                       header_line("demo", cfg, dc.seed, "days=" + std::to_string(dc.days) + " w=" + shortest(dc.w)));

  double v_dev = 0.0;
  for (double v : trace.voltages) v_dev = std::max(v_dev, std::abs(v - game.sensitivities().v0));
  const auto [lo, hi] = std::minmax_element(trace.losses_fractions.begin(), trace.losses_fractions.end());
  std::cout << "max voltage deviation " << shortest(v_dev) << " p.u.; losses fraction in [" << shortest(*lo) << ", "
            << shortest(*hi) << "]\n"
            << "wrote " << path.string() << '\n';
  return kOk;
}

// ---- verify ----

struct VerifyArgs {
  std::string fault = "none";
  std::optional<std::uint64_t> seed;
  std::optional<double> w;
};

int cmd_verify(const Common& common, const VerifyArgs& args) {
  auto cfg = load(common);
  dlmp::VerifyOptions opts;
  opts.seed = args.seed.value_or(cfg.eval.seed);
  opts.threads = common.effective_threads();
  if (args.fault == "perturb-impedance") {
    opts.fault = dlmp::PotentialFault::PerturbImpedance;
  } else if (args.fault == "drop-self-terms") {
    opts.fault = dlmp::PotentialFault::DropSelfTerms;
  } else if (args.fault == "couple-transition") {
    opts.transition = dlmp::coupled_transition;
  } else if (args.fault != "none") {
    throw dlmp::ConfigError("unknown --inject-fault " + args.fault);
  }
  const double w = args.w.value_or(cfg.eval.w);
  const auto game = dlmp::build_game(cfg, w);
  const auto report = dlmp::run_verify(game, opts);

  std::cout << dlmp::format_table(report);
  json doc = report;
  doc["meta"] = {{"config_hash", dlmp::config_hash(cfg)}, {"seed", opts.seed}, {"w", w}, {"fault", args.fault}};
  const fs::path path = cfg.output_dir / "verify.json";
  auto out = open_output(path);
  out << doc.dump(2) << '\n';
  std::cout << "wrote " << path.string() << '\n';
  return report.all_pass() ? kOk : kCheckFailed;
}

// ---- parse ----

struct ParseArgs {
  std::string case_file;
  double load_scale = 1.0;
  bool as_json = false;
};

int cmd_parse(const ParseArgs& args) {
  const auto net = dlmp::scale_loads(dlmp::load_case_file(args.case_file), args.load_scale);
  if (args.as_json) {
    std::cout << json(net).dump(2) << '\n';
    return kOk;
  }
  const auto sens = dlmp::build_sensitivities(net);
  Eigen::VectorXd p(net.node_count);
  Eigen::VectorXd q(net.node_count);
  int loads = 0;
  for (int k = 0; k < net.node_count; ++k) {
    p(k) = net.nominal_load[k].p;
    q(k) = net.nominal_load[k].q;
    if (p(k) != 0.0 || q(k) != 0.0) ++loads;
  }
  const auto flows = dlmp::solve(sens, p, q, net.v0);
  std::cout << "nodes (excluding substation): " << net.node_count << '\n'
            << "lines: " << net.edges.size() << '\n'
            << "load buses: " << loads << '\n'
            << "total load: p=" << shortest(p.sum()) << " q=" << shortest(q.sum()) << " p.u.\n"
            << "at nominal load: losses=" << shortest(flows.losses)
            << " fraction=" << shortest(dlmp::losses_fraction(flows, p)) << " v_min=" << shortest(flows.v.minCoeff())
            << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nodal-pricing storage game: train, evaluate, demo and verify"};
  app.require_subcommand(1);

  Common common;
  auto add_common = [&common](CLI::App* sub) {
    sub->add_option("config", common.config_path, "Run configuration (JSON)")->required();
    sub->add_option("--threads", common.threads, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_flag("--deterministic", common.deterministic, "Serial execution for byte-identical output");
    sub->add_option("--output-dir", common.output_dir, "Overrides the configured output directory");
  };

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "Train a joint policy");
  add_common(train);
  train->add_option("--mode", train_args.mode, "EQ, SO or UN");
  train->add_option("--w", train_args.w, "Voltage weight in [0, 1]");
  train->add_option("--seed", train_args.seed, "Training seed");
  train->add_option("--n-train", train_args.n_train, "Training iterations");

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "Evaluate policies with common random numbers");
  add_common(eval);
  eval->add_option("--policy", eval_args.policies, "Policy files")->required();
  eval->add_option("--labels", eval_args.labels, "One label per policy");
  eval->add_option("--seed", eval_args.seed, "Evaluation seed");
  eval->add_option("--w", eval_args.w, "Voltage weight in [0, 1]");
  eval->add_option("--policy-mode", eval_args.policy_mode, "stochastic or deterministic");

  DemoArgs demo_args;
  auto* demo = app.add_subcommand("demo", "Deterministic multi-day rollout");
  add_common(demo);
  demo->add_option("--policy", demo_args.policy, "Policy file")->required();
  demo->add_option("--days", demo_args.days, "Days to simulate")->check(CLI::PositiveNumber);
  demo->add_option("--w", demo_args.w, "Voltage weight in [0, 1]");
  demo->add_option("--seed", demo_args.seed, "Noise seed");

  VerifyArgs verify_args;
  auto* verify = app.add_subcommand("verify", "Numerical checks of the potential-game structure");
  add_common(verify);
  verify->add_option("--inject-fault", verify_args.fault,
                     "Test hook: none, perturb-impedance, drop-self-terms or couple-transition");
  verify->add_option("--seed", verify_args.seed, "Sampling seed");
  verify->add_option("--w", verify_args.w, "Voltage weight in [0, 1]");

  ParseArgs parse_args;
  auto* parse = app.add_subcommand("parse", "Inspect a MATPOWER case file");
  parse->add_option("case", parse_args.case_file, "Case file")->required();
  parse->add_option("--load-scale", parse_args.load_scale, "Multiply every load");
  parse->add_flag("--json", parse_args.as_json, "Print the network as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*train) return cmd_train(common, train_args);
    if (*eval) return cmd_eval(common, eval_args);
    if (*demo) return cmd_demo(common, demo_args);
    if (*verify) return cmd_verify(common, verify_args);
    if (*parse) return cmd_parse(parse_args);
  } catch (const dlmp::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const dlmp::CaseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const dlmp::ArgumentError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const dlmp::TrainingError& e) {
    std::cerr << "training failed: " << e.what() << '\n';
    return kCheckFailed;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kCheckFailed;
  }
  return kUsage;
}
