#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "collusim/engine.hpp"
#include "collusim/stability.hpp"

namespace collusim {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SweepAxis {
  std::string param;  // dotted path into the resolved config document
  std::vector<double> values;
};

struct ExperimentConfig {
  SimConfig sim;
  std::vector<SweepAxis> axes;
  std::string out_dir = "out";
  int threads = 0;
  bool scaled = false;
  std::string resolved_json;  // canonical document; all defaults materialized
  std::uint64_t config_hash = 0;
};

struct StabilityRunConfig {
  stability::Instance instance;
  bool dot = false;
  int threads = 0;
  std::string out_dir = "out";
  std::string resolved_json;
  std::uint64_t config_hash = 0;
};

// Parses a config document; accepts both shorthand and canonical forms.
// Malformed JSON raises ConfigError with a line:column diagnostic.
ExperimentConfig parse_experiment_config(const std::string& json_text);
ExperimentConfig load_experiment_config(const std::string& path);

StabilityRunConfig parse_stability_config(const std::string& json_text);
StabilityRunConfig load_stability_config(const std::string& path);

// Game subdocuments are shared between the two config kinds.
GameSpec game_from_config_json(const std::string& game_json);

// Sets a numeric leaf at a dotted path of the canonical document; the path
// must already exist.
std::string patch_config(const std::string& json_text, const std::string& dotted_path,
                         double value);

std::uint64_t fnv1a64(std::string_view text);

}  // namespace collusim
