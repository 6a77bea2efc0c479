#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "model/config.hpp"
#include "tensor/tensor.hpp"

namespace mmae::model {

using tensor::Tensor;

// Pre-norm transformer block: z′ = MSA(LN₁(z)) + z, z = MLP(LN₂(z′)) + z′.
template <typename T>
struct BlockParams {
  Tensor<T> ln1_gamma, ln1_beta;
  Tensor<T> qkv_w, qkv_b;  // D × 3D, 3D
  Tensor<T> out_w, out_b;  // D × D, D
  Tensor<T> ln2_gamma, ln2_beta;
  Tensor<T> fc1_w, fc1_b;  // D × hD, hD
  Tensor<T> fc2_w, fc2_b;  // hD × D, D
};

template <typename T>
struct ModelParams {
  Tensor<T> patch_w, patch_b;  // E: P × D
  Tensor<T> aux;               // 1 × D
  Tensor<T> enc_pos;           // (T+δ+1) × D
  std::vector<BlockParams<T>> encoder;
  Tensor<T> enc_norm_gamma, enc_norm_beta;  // only with final_encoder_norm
  Tensor<T> dec_proj_w, dec_proj_b;         // E′: D × D′
  Tensor<T> mask_token;                     // 1 × D′
  Tensor<T> dec_pos;                        // (T+δ) × D′
  BlockParams<T> decoder;
  Tensor<T> dec_norm_gamma, dec_norm_beta;  // only with decoder_output_norm
  Tensor<T> out_w, out_b;                   // E₀: D′ × P

  // Every present tensor with a stable name, in a fixed order.
  std::vector<std::pair<std::string, Tensor<T>*>> named();
  std::vector<std::pair<std::string, const Tensor<T>*>> named() const;

  std::size_t scalar_count() const;

  template <typename U>
  ModelParams<U> cast() const;
};

// Shapes implied by a configuration, in named() order.
std::vector<std::pair<std::string, tensor::Shape>> parameter_shapes(const ModelConfig& cfg);

// Truncated normal (σ = init_std, cut at ±2σ) for projections, embeddings and
// tokens; zeros for biases and LN beta; ones for LN gamma.
ModelParams<float> init_params(const ModelConfig& cfg, std::uint64_t seed);

// Allocates zero tensors of the configured shapes (LN gamma included).
template <typename T>
ModelParams<T> zero_params(const ModelConfig& cfg);

}  // namespace mmae::model
