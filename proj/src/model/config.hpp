#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

#include "data/segment.hpp"
#include "tensor/ops.hpp"

namespace mmae::model {

enum class Rounding { HalfUp, Floor };

// Which token streams take part in encoding and reconstruction.
enum class StreamMode { Both, GlobalOnly, LocalOnly };

struct AblationToggles {
  StreamMode streams = StreamMode::Both;
  // Local tokens reuse the global positional rows of their segments.
  bool shared_local_positions = false;
  // One mask drawn over the concatenated T+δ tokens instead of per stream.
  bool single_pool_mask = false;
  // Reconstruct and score every segment, masked or not.
  bool loss_all_segments = false;

  bool operator==(const AblationToggles&) const = default;
};

struct ModelConfig {
  // Data geometry.
  std::size_t leads = 12;
  std::size_t segment_length = 125;
  std::size_t segments = 40;  // T
  // Local regions: δ consecutive segments after each offset w.
  std::size_t region_length = 4;
  std::vector<std::size_t> region_offsets{1, 5, 9, 13, 17, 21, 25, 29, 33};

  std::size_t embed_dim = 64;
  std::size_t decoder_dim = 64;
  std::size_t depth = 3;
  std::size_t encoder_heads = 16;
  std::size_t decoder_heads = 2;
  std::size_t mlp_ratio = 4;
  double mask_ratio = 0.25;
  Rounding rounding = Rounding::HalfUp;

  bool final_encoder_norm = false;
  bool decoder_output_norm = false;
  double layer_norm_eps = 1e-6;
  double init_std = 0.02;

  tensor::Reduction loss_reduction = tensor::Reduction::Mean;
  data::NormalizationOptions normalization;
  AblationToggles ablation;

  std::size_t patch_size() const noexcept { return leads * segment_length; }
  std::size_t samples() const noexcept { return segments * segment_length; }
  std::size_t regions() const noexcept { return region_offsets.size(); }

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

void to_json(nlohmann::json& j, const ModelConfig& c);
// Missing keys keep their defaults; unknown keys are rejected.
void from_json(const nlohmann::json& j, ModelConfig& c);

std::string to_string(StreamMode m);
StreamMode parse_stream_mode(const std::string& s);

}  // namespace mmae::model
