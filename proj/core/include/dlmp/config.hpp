#pragma once

#include "dlmp/devices.hpp"
#include "dlmp/evaluator.hpp"
#include "dlmp/exogenous.hpp"
#include "dlmp/game.hpp"
#include "dlmp/trainer.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>

namespace dlmp {

/// Overrides the output directory when the config does not name one.
inline constexpr const char* kOutputDirEnv = "DLMP_OUTPUT_DIR";

struct RunConfig {
  std::filesystem::path network_file;  // absolute after loading
  double load_scale = 3.0;
  ExoConfig exogenous;
  DeviceConfig devices;
  TrainConfig train;
  EvalConfig eval;
  std::filesystem::path output_dir = "out";

  /// Throws ConfigError naming the first invalid field or missing file.
  void validate() const;
};

/// Missing keys take their defaults; unknown keys are rejected. Relative paths
/// resolve against `base_dir`.
RunConfig parse_run_config(const nlohmann::json& j, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

nlohmann::json to_json(const RunConfig& cfg);

/// 16 hex digits of FNV-1a over the canonical JSON of `cfg`.
std::string config_hash(const RunConfig& cfg);

/// Network loaded, loads scaled and the game built at weight `w`.
Game build_game(const RunConfig& cfg, double w);

}  // namespace dlmp
