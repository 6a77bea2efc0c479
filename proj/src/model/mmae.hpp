#pragma once

#include <span>
#include <vector>

#include "model/config.hpp"
#include "model/masking.hpp"
#include "model/params.hpp"
#include "tensor/ops.hpp"

namespace mmae::model {

using tensor::Tape;
using tensor::Var;

template <typename T>
struct BoundBlock {
  Var<T> ln1_gamma, ln1_beta;
  tensor::AttentionWeights<T> attn;
  Var<T> ln2_gamma, ln2_beta;
  Var<T> fc1_w, fc1_b, fc2_w, fc2_b;
};

// ModelParams registered as leaves of one tape. `leaves` follows the order
// of ModelParams::named().
template <typename T>
struct BoundParams {
  Tape<T>* tape = nullptr;
  Var<T> patch_w, patch_b, aux, enc_pos;
  std::vector<BoundBlock<T>> encoder;
  Var<T> enc_norm_gamma, enc_norm_beta;
  Var<T> dec_proj_w, dec_proj_b, mask_token, dec_pos;
  BoundBlock<T> decoder;
  Var<T> dec_norm_gamma, dec_norm_beta;
  Var<T> out_w, out_b;
  std::vector<Var<T>> leaves;
};

// The parameters must outlive the tape.
template <typename T>
BoundParams<T> bind(Tape<T>& tape, const ModelParams<T>& params, bool requires_grad);

// Assembles BoundParams from existing leaves given in ModelParams::named()
// order for a model of configuration cfg.
template <typename T>
BoundParams<T> bind_leaves(const ModelConfig& cfg, std::span<const Var<T>> leaves);

// Decoder outputs selected for reconstruction, one row per slot.
template <typename T>
struct Reconstruction {
  Var<T> values;                      // rows × P
  std::vector<std::size_t> segments;  // 1-based global segment index of each row
  std::vector<bool> local;            // row belongs to the local stream
  std::vector<bool> masked;           // row was hidden from the encoder
  std::size_t decoder_length = 0;
};

template <typename T>
struct LossVars {
  Var<T> l_global, l_local, total;
};

// z_L with rows [aux; unmasked global (ascending); unmasked local (ascending)].
template <typename T>
Var<T> encode(const BoundParams<T>& p, const ModelConfig& cfg, const tensor::Tensor<T>& patches, const MaskPlan& plan);

// Decoder over [z_L·E′ without aux; mask tokens for masked global, then
// masked local slots]. Returns masked-slot reconstructions, or every slot
// under the loss_all_segments ablation.
template <typename T>
Reconstruction<T> decode(const BoundParams<T>& p, const ModelConfig& cfg, Var<T> latent, const MaskPlan& plan);

// Normalised target f(x) for each reconstructed row.
template <typename T>
tensor::Tensor<T> reconstruction_targets(const Reconstruction<T>& recon, const tensor::Tensor<T>& patches,
                                         const ModelConfig& cfg);

// l_global and l_local over the reconstructed rows of each stream, with the
// configured reduction. A stream without rows contributes 0.
template <typename T>
LossVars<T> reconstruction_loss(const Reconstruction<T>& recon, const tensor::Tensor<T>& patches,
                                const ModelConfig& cfg);

template <typename T>
struct ForwardPass {
  Var<T> latent;
  Reconstruction<T> recon;
  LossVars<T> loss;
};

template <typename T>
ForwardPass<T> forward(const BoundParams<T>& p, const ModelConfig& cfg, const tensor::Tensor<T>& patches,
                       const MaskPlan& plan);

struct LossParts {
  double l_global = 0;
  double l_local = 0;
  double total = 0;
};

// One gradient-free pass.
template <typename T>
LossParts evaluate_loss(const ModelParams<T>& params, const ModelConfig& cfg, const tensor::Tensor<T>& patches,
                        const MaskPlan& plan);

// Global and local segment indices that enter the encoder under cfg's
// stream mode, in token order.
std::vector<std::size_t> encoder_global_segments(const ModelConfig& cfg, const MaskPlan& plan);
std::vector<std::size_t> encoder_local_segments(const ModelConfig& cfg, const MaskPlan& plan);

// Positional table rows for the encoder and decoder.
std::size_t encoder_global_row(std::size_t segment);
std::size_t encoder_local_row(const ModelConfig& cfg, std::size_t region_offset, std::size_t segment);
std::size_t decoder_global_row(std::size_t segment);
std::size_t decoder_local_row(const ModelConfig& cfg, std::size_t region_offset, std::size_t segment);

}  // namespace mmae::model
