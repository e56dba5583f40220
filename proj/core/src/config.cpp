#include "dlmp/config.hpp"

#include "dlmp/errors.hpp"
#include "dlmp/netmodel.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

namespace dlmp {
namespace {

using nlohmann::json;

// Reads an optional field, rejecting wrong types with the dotted key name.
template <class T>
void read(const json& block, const std::string& prefix, const char* key, T& out) {
  auto it = block.find(key);
  if (it == block.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config field " + prefix + key + " has the wrong type");
  }
}

void reject_unknown(const json& block, const std::string& name, std::initializer_list<const char*> keys) {
  if (!block.is_object()) throw ConfigError("config block " + name + " must be an object");
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& item : block.items()) {
    if (!allowed.count(item.key())) throw ConfigError("unknown config key " + name + "." + item.key());
  }
}

PolicyMode parse_policy_mode(const std::string& text) {
  if (text == "stochastic") return PolicyMode::Stochastic;
  if (text == "deterministic") return PolicyMode::Deterministic;
  throw ConfigError("eval.policy_mode must be stochastic or deterministic, got " + text);
}

template <class F>
void wrap(F&& check) {
  try {
    check();
  } catch (const ArgumentError& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace

void RunConfig::validate() const {
  if (!std::filesystem::exists(network_file)) {
    throw ConfigError("network file not found: " + network_file.string());
  }
  if (!(load_scale > 0.0)) throw ConfigError("load_scale must be positive");
  wrap([&] { exogenous.validate(); });
  if (!(devices.capacity_hours > 0.0)) throw ConfigError("devices.capacity_hours must be positive");
  if (!(devices.inverter_factor > 0.0)) throw ConfigError("devices.inverter_factor must be positive");
  wrap([&] { train.validate(); });
  wrap([&] { eval.validate(); });
}

RunConfig parse_run_config(const json& j, const std::filesystem::path& base_dir) {
  reject_unknown(j, "config", {"network_file", "load_scale", "exogenous", "devices", "train", "eval", "output_dir"});
  RunConfig cfg;
  if (!j.contains("network_file")) throw ConfigError("config is missing network_file");
  std::string network;
  read(j, "", "network_file", network);
  cfg.network_file = std::filesystem::path(network).is_absolute() ? std::filesystem::path(network)
                                                                   : base_dir / network;
  read(j, "", "load_scale", cfg.load_scale);

  if (j.contains("output_dir")) {
    std::string out;
    read(j, "", "output_dir", out);
    cfg.output_dir = std::filesystem::path(out).is_absolute() ? std::filesystem::path(out) : base_dir / out;
  } else if (const char* env = std::getenv(kOutputDirEnv); env && *env) {
    cfg.output_dir = env;
  }

  if (j.contains("exogenous")) {
    const auto& b = j["exogenous"];
    reject_unknown(b, "exogenous",
                   {"tau", "kappa", "sigma_xi", "z", "lambda_star", "delta_min", "delta_max", "period_hours"});
    auto& e = cfg.exogenous;
    read(b, "exogenous.", "tau", e.tau);
    read(b, "exogenous.", "kappa", e.kappa);
    read(b, "exogenous.", "sigma_xi", e.sigma_xi);
    read(b, "exogenous.", "z", e.z);
    read(b, "exogenous.", "lambda_star", e.lambda_star);
    read(b, "exogenous.", "delta_min", e.delta_min);
    read(b, "exogenous.", "delta_max", e.delta_max);
    read(b, "exogenous.", "period_hours", e.period_hours);
  }
  if (j.contains("devices")) {
    const auto& b = j["devices"];
    reject_unknown(b, "devices", {"capacity_hours", "inverter_factor"});
    read(b, "devices.", "capacity_hours", cfg.devices.capacity_hours);
    read(b, "devices.", "inverter_factor", cfg.devices.inverter_factor);
  }
  if (j.contains("train")) {
    const auto& b = j["train"];
    reject_unknown(b, "train", {"gamma", "beta", "n_train", "n_batch", "mode", "w", "seed", "threads"});
    auto& t = cfg.train;
    read(b, "train.", "gamma", t.gamma);
    read(b, "train.", "beta", t.beta);
    read(b, "train.", "n_train", t.n_train);
    read(b, "train.", "n_batch", t.n_batch);
    read(b, "train.", "w", t.w);
    read(b, "train.", "seed", t.seed);
    read(b, "train.", "threads", t.threads);
    if (b.contains("mode")) {
      std::string mode;
      read(b, "train.", "mode", mode);
      wrap([&] { t.mode = parse_reward_mode(mode); });
    }
  }
  if (j.contains("eval")) {
    const auto& b = j["eval"];
    reject_unknown(b, "eval", {"n_rollouts", "horizon", "gamma", "w", "seed", "policy_mode", "threads"});
    auto& e = cfg.eval;
    read(b, "eval.", "n_rollouts", e.n_rollouts);
    read(b, "eval.", "horizon", e.horizon);
    read(b, "eval.", "gamma", e.gamma);
    read(b, "eval.", "w", e.w);
    read(b, "eval.", "seed", e.seed);
    read(b, "eval.", "threads", e.threads);
    if (b.contains("policy_mode")) {
      std::string mode;
      read(b, "eval.", "policy_mode", mode);
      e.policy_mode = parse_policy_mode(mode);
    }
  }
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  auto base = path.parent_path();
  if (base.empty()) base = ".";
  return parse_run_config(j, base);
}

json to_json(const RunConfig& cfg) {
  const auto& e = cfg.exogenous;
  const auto& t = cfg.train;
  const auto& v = cfg.eval;
  // Thread counts do not change results and are left out so the hash ignores them.
  return json{
      {"network_file", cfg.network_file.string()},
      {"load_scale", cfg.load_scale},
      {"exogenous",
       {{"tau", e.tau},
        {"kappa", e.kappa},
        {"sigma_xi", e.sigma_xi},
        {"z", e.z},
        {"lambda_star", e.lambda_star},
        {"delta_min", e.delta_min},
        {"delta_max", e.delta_max},
        {"period_hours", e.period_hours}}},
      {"devices", {{"capacity_hours", cfg.devices.capacity_hours}, {"inverter_factor", cfg.devices.inverter_factor}}},
      {"train",
       {{"gamma", t.gamma},
        {"beta", t.beta},
        {"n_train", t.n_train},
        {"n_batch", t.n_batch},
        {"mode", to_string(t.mode)},
        {"w", t.w},
        {"seed", t.seed}}},
      {"eval",
       {{"n_rollouts", v.n_rollouts},
        {"horizon", v.horizon},
        {"gamma", v.gamma},
        {"w", v.w},
        {"seed", v.seed},
        {"policy_mode", v.policy_mode == PolicyMode::Stochastic ? "stochastic" : "deterministic"}}},
      {"output_dir", cfg.output_dir.string()},
  };
}

std::string config_hash(const RunConfig& cfg) {
  auto canonical = to_json(cfg);
  // Where the run writes does not change what it computes.
  canonical.erase("output_dir");
  const std::string text = canonical.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int k = 15; k >= 0; --k, h >>= 4) out[k] = digits[h & 0xf];
  return out;
}

Game build_game(const RunConfig& cfg, double w) {
  const auto net = scale_loads(load_case_file(cfg.network_file), cfg.load_scale);
  return Game(net, cfg.exogenous, cfg.devices, w);
}

}  // namespace dlmp
