#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "model/config.hpp"
#include "train/scoring.hpp"
#include "train/trainer.hpp"

namespace mmae::app {

struct DataConfig {
  std::size_t leads = 12;
  std::uint32_t fs = 500;
  std::size_t segment_length = 125;
  // Resolved against the config file's directory when relative.
  std::string train_manifest;
  std::string test_manifest;

  bool operator==(const DataConfig&) const = default;
};

// One JSON document with data, model, train and infer sections. Missing
// keys keep their defaults, unknown keys are config errors.
struct RunConfig {
  DataConfig data;
  model::ModelConfig model;
  train::TrainConfig train;
  train::InferConfig infer;

  void validate() const;
  bool operator==(const RunConfig&) const = default;
};

void to_json(nlohmann::json& j, const RunConfig& c);
// data.leads and data.segment_length seed the model section; an explicit
// model value that disagrees is a config error.
void from_json(const nlohmann::json& j, RunConfig& c);

RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);

// Checks a record against the data section (lead count, rate, length).
void check_record(const DataConfig& data, const model::ModelConfig& model, const data::EcgRecord& record);

}  // namespace mmae::app
