#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "cofuse/training/model.hpp"
#include "cofuse/training/trainer.hpp"
#include "cofuse/world/scenario.hpp"

namespace cofuse::experiment {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EmitFormats {
  bool csv = true;
  bool json = false;
};

struct ExperimentConfig {
  world::ScenarioConfig scenario;
  training::ModelConfig model;
  training::TrainConfig train;
  std::filesystem::path output_dir = "results";
  EmitFormats emit;

  void validate() const;
};

// Every key is optional and falls back to the default; unknown keys are an
// error naming their JSON path.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& config);

ExperimentConfig parse_config(const std::string& text);
std::string serialize_config(const ExperimentConfig& config);
// Throws ConfigError naming the path if it cannot be read or parsed.
ExperimentConfig load_config(const std::filesystem::path& path);

// Named starting points that vary the hazard geometry: "default",
// "overtaking", "left_turn", "red_light".
world::ScenarioConfig scenario_preset(const std::string& name);

}  // namespace cofuse::experiment
