#include "model/counters.hpp"

#include "model/masking.hpp"

namespace mmae::model {

namespace {

std::uint64_t block_params(std::uint64_t d, std::uint64_t ratio) {
  const std::uint64_t h = ratio * d;
  return 2 * d                  // LN₁
         + d * 3 * d + 3 * d    // QKV
         + d * d + d            // output projection
         + 2 * d                // LN₂
         + d * h + h + h * d + d;  // MLP
}

}  // namespace

std::uint64_t count_parameters(const ModelConfig& cfg) {
  cfg.validate();
  const std::uint64_t p = cfg.patch_size(), d = cfg.embed_dim, dd = cfg.decoder_dim;
  const std::uint64_t t = cfg.segments, delta = cfg.region_length;
  std::uint64_t n = p * d + d;  // E
  n += d;                       // aux token
  n += (t + delta + 1) * d;     // encoder positions
  n += cfg.depth * block_params(d, cfg.mlp_ratio);
  if (cfg.final_encoder_norm) n += 2 * d;
  n += d * dd + dd;          // E′
  n += dd;                   // mask token
  n += (t + delta) * dd;     // decoder positions
  n += block_params(dd, cfg.mlp_ratio);
  if (cfg.decoder_output_norm) n += 2 * dd;
  n += dd * p + p;  // E₀
  return n;
}

std::uint64_t block_macs(std::size_t n, std::size_t d, std::size_t mlp_ratio) {
  const std::uint64_t nn = n, dd = d;
  return nn * dd * 3 * dd      // QKV
         + 2 * nn * nn * dd    // scores and weighted sum over all heads
         + nn * dd * dd        // output projection
         + 2 * nn * dd * mlp_ratio * dd;
}

FlopBreakdown estimate_flops(const ModelConfig& cfg) {
  cfg.validate();
  const bool global = cfg.ablation.streams != StreamMode::LocalOnly;
  const bool local = cfg.ablation.streams != StreamMode::GlobalOnly;
  std::size_t s_m = 0, r_m = 0;
  if (cfg.ablation.single_pool_mask) {
    // Expected split of the pooled mask between the two streams.
    const std::size_t m = masked_count(cfg.segments + cfg.region_length, cfg.mask_ratio, cfg.rounding);
    s_m = m * cfg.segments / (cfg.segments + cfg.region_length);
    r_m = m - s_m;
  } else {
    s_m = masked_count(cfg.segments, cfg.mask_ratio, cfg.rounding);
    r_m = masked_count(cfg.region_length, cfg.mask_ratio, cfg.rounding);
  }
  const std::size_t vis = (global ? cfg.segments - s_m : 0) + (local ? cfg.region_length - r_m : 0);
  const std::size_t hidden = (global ? s_m : 0) + (local ? r_m : 0);
  const std::size_t recon = cfg.ablation.loss_all_segments ? vis + hidden : hidden;

  FlopBreakdown f;
  f.encoder_tokens = vis + 1;
  f.decoder_tokens = vis + hidden;
  f.patch_embed = std::uint64_t(vis) * cfg.patch_size() * cfg.embed_dim;
  f.encoder = cfg.depth * block_macs(f.encoder_tokens, cfg.embed_dim, cfg.mlp_ratio);
  f.decoder_proj = std::uint64_t(vis) * cfg.embed_dim * cfg.decoder_dim;
  f.decoder = block_macs(f.decoder_tokens, cfg.decoder_dim, cfg.mlp_ratio);
  f.output_proj = std::uint64_t(recon) * cfg.decoder_dim * cfg.patch_size();
  return f;
}

}  // namespace mmae::model
