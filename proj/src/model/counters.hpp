#pragma once

#include <cstdint>

#include "model/config.hpp"

namespace mmae::model {

// Learnable scalars of the architecture described by cfg.
std::uint64_t count_parameters(const ModelConfig& cfg);

// Multiply-accumulate counts of one (region, plan) forward pass at the
// configured mask counts. Elementwise work (norms, softmax, GELU, adds) is
// not counted.
struct FlopBreakdown {
  std::uint64_t patch_embed = 0;
  std::uint64_t encoder = 0;  // all L blocks
  std::uint64_t decoder_proj = 0;
  std::uint64_t decoder = 0;
  std::uint64_t output_proj = 0;
  std::size_t encoder_tokens = 0;
  std::size_t decoder_tokens = 0;

  std::uint64_t per_pass() const { return patch_embed + encoder + decoder_proj + decoder + output_proj; }
  // Per-pass cost times ν regions times H passes.
  std::uint64_t inference_total(std::size_t regions, std::size_t passes) const {
    return per_pass() * regions * passes;
  }
};

FlopBreakdown estimate_flops(const ModelConfig& cfg);

// MACs of one transformer block over n tokens of width d.
std::uint64_t block_macs(std::size_t n, std::size_t d, std::size_t mlp_ratio);

}  // namespace mmae::model
