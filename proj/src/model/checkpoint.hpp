#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "model/config.hpp"
#include "model/params.hpp"

namespace mmae::model {

struct Checkpoint {
  ModelConfig config;
  ModelParams<float> params;
  // Free-form sections stored alongside the model (training summary, infer defaults).
  nlohmann::json extra = nlohmann::json::object();
};

// "MMAE" | u16 version | u32 header length | JSON header | float32 LE payloads.
std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(const std::string& bytes, const std::string& origin = "checkpoint");

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// FNV-1a over the serialized bytes, as 16 hex digits.
std::string checkpoint_hash(const Checkpoint& ckpt);

}  // namespace mmae::model
