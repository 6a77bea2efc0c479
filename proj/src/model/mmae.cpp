#include "model/mmae.hpp"

#include "data/segment.hpp"

namespace mmae::model {

using tensor::Tensor;

namespace {

template <typename T>
class LeafCursor {
 public:
  explicit LeafCursor(std::span<const Var<T>> leaves) : leaves_(leaves) {}
  Var<T> next() {
    require(pos_ < leaves_.size(), ErrorCode::Contract, "too few parameter leaves for the configuration");
    return leaves_[pos_++];
  }
  bool done() const { return pos_ == leaves_.size(); }

 private:
  std::span<const Var<T>> leaves_;
  std::size_t pos_ = 0;
};

template <typename T>
BoundBlock<T> bind_block(LeafCursor<T>& c) {
  BoundBlock<T> out;
  out.ln1_gamma = c.next();
  out.ln1_beta = c.next();
  out.attn.qkv_w = c.next();
  out.attn.qkv_b = c.next();
  out.attn.out_w = c.next();
  out.attn.out_b = c.next();
  out.ln2_gamma = c.next();
  out.ln2_beta = c.next();
  out.fc1_w = c.next();
  out.fc1_b = c.next();
  out.fc2_w = c.next();
  out.fc2_b = c.next();
  return out;
}

template <typename T>
Var<T> run_block(Var<T> z, const BoundBlock<T>& b, std::size_t heads, T eps) {
  Var<T> h = tensor::layer_norm(z, b.ln1_gamma, b.ln1_beta, eps);
  Var<T> z1 = tensor::add(z, tensor::multi_head_self_attention(h, b.attn, heads));
  Var<T> h2 = tensor::layer_norm(z1, b.ln2_gamma, b.ln2_beta, eps);
  Var<T> m = tensor::linear(tensor::gelu(tensor::linear(h2, b.fc1_w, b.fc1_b)), b.fc2_w, b.fc2_b);
  return tensor::add(z1, m);
}

bool uses_global(const ModelConfig& cfg) { return cfg.ablation.streams != StreamMode::LocalOnly; }
bool uses_local(const ModelConfig& cfg) { return cfg.ablation.streams != StreamMode::GlobalOnly; }

void check_plan(const ModelConfig& cfg, const MaskPlan& plan) {
  require(plan.region_offset + cfg.region_length <= cfg.segments, ErrorCode::Contract,
          "mask plan region lies outside the configured segments");
  plan.validate(cfg.segments, cfg.region_length);
}

}  // namespace

std::vector<std::size_t> encoder_global_segments(const ModelConfig& cfg, const MaskPlan& plan) {
  return uses_global(cfg) ? plan.global_unmasked : std::vector<std::size_t>{};
}

std::vector<std::size_t> encoder_local_segments(const ModelConfig& cfg, const MaskPlan& plan) {
  return uses_local(cfg) ? plan.local_unmasked : std::vector<std::size_t>{};
}

std::size_t encoder_global_row(std::size_t segment) { return segment; }

std::size_t encoder_local_row(const ModelConfig& cfg, std::size_t region_offset, std::size_t segment) {
  if (cfg.ablation.shared_local_positions) return segment;
  return cfg.segments + (segment - region_offset);
}

std::size_t decoder_global_row(std::size_t segment) { return segment - 1; }

std::size_t decoder_local_row(const ModelConfig& cfg, std::size_t region_offset, std::size_t segment) {
  if (cfg.ablation.shared_local_positions) return segment - 1;
  return cfg.segments + (segment - region_offset) - 1;
}

template <typename T>
BoundParams<T> bind_leaves(const ModelConfig& cfg, std::span<const Var<T>> leaves) {
  require(!leaves.empty(), ErrorCode::Contract, "no parameter leaves");
  LeafCursor<T> c(leaves);
  BoundParams<T> p;
  p.tape = leaves.front().tape;
  p.leaves.assign(leaves.begin(), leaves.end());
  p.patch_w = c.next();
  p.patch_b = c.next();
  p.aux = c.next();
  p.enc_pos = c.next();
  for (std::size_t i = 0; i < cfg.depth; ++i) p.encoder.push_back(bind_block(c));
  if (cfg.final_encoder_norm) {
    p.enc_norm_gamma = c.next();
    p.enc_norm_beta = c.next();
  }
  p.dec_proj_w = c.next();
  p.dec_proj_b = c.next();
  p.mask_token = c.next();
  p.dec_pos = c.next();
  p.decoder = bind_block(c);
  if (cfg.decoder_output_norm) {
    p.dec_norm_gamma = c.next();
    p.dec_norm_beta = c.next();
  }
  p.out_w = c.next();
  p.out_b = c.next();
  require(c.done(), ErrorCode::Contract, "too many parameter leaves for the configuration");
  return p;
}

template <typename T>
BoundParams<T> bind(Tape<T>& tape, const ModelParams<T>& m, bool g) {
  std::vector<Var<T>> leaves;
  for (const auto& [name, t] : m.named()) leaves.push_back(tape.parameter(*t, g));
  ModelConfig shape;
  shape.depth = m.encoder.size();
  shape.final_encoder_norm = !m.enc_norm_gamma.empty();
  shape.decoder_output_norm = !m.dec_norm_gamma.empty();
  return bind_leaves<T>(shape, leaves);
}

template <typename T>
Var<T> encode(const BoundParams<T>& p, const ModelConfig& cfg, const Tensor<T>& patches, const MaskPlan& plan) {
  require(patches.rank() == 2 && patches.rows() == cfg.segments && patches.cols() == cfg.patch_size(),
          ErrorCode::Contract,
          "segment grid " + tensor::shape_string(patches.shape()) + " does not match the model (" +
              std::to_string(cfg.segments) + " x " + std::to_string(cfg.patch_size()) + ")");
  require(p.encoder.size() == cfg.depth, ErrorCode::Contract, "parameters do not match the configured depth");
  check_plan(cfg, plan);
  Tape<T>& tape = *p.tape;

  std::vector<std::size_t> patch_rows, pos_rows{0};
  for (auto s : encoder_global_segments(cfg, plan)) {
    patch_rows.push_back(s - 1);
    pos_rows.push_back(encoder_global_row(s));
  }
  for (auto s : encoder_local_segments(cfg, plan)) {
    patch_rows.push_back(s - 1);
    pos_rows.push_back(encoder_local_row(cfg, plan.region_offset, s));
  }
  require(!patch_rows.empty(), ErrorCode::Contract, "mask plan leaves no visible segment for the encoder");

  Var<T> x = tensor::gather_rows(tape.constant(patches), patch_rows);
  Var<T> tokens = tensor::concat_rows<T>({p.aux, tensor::linear(x, p.patch_w, p.patch_b)});
  Var<T> z = tensor::add(tokens, tensor::gather_rows(p.enc_pos, pos_rows));
  const T eps = static_cast<T>(cfg.layer_norm_eps);
  for (const auto& block : p.encoder) z = run_block(z, block, cfg.encoder_heads, eps);
  if (p.enc_norm_gamma.valid()) z = tensor::layer_norm(z, p.enc_norm_gamma, p.enc_norm_beta, eps);
  return z;
}

template <typename T>
Reconstruction<T> decode(const BoundParams<T>& p, const ModelConfig& cfg, Var<T> latent, const MaskPlan& plan) {
  check_plan(cfg, plan);
  const auto vis_global = encoder_global_segments(cfg, plan);
  const auto vis_local = encoder_local_segments(cfg, plan);
  const std::size_t visible = vis_global.size() + vis_local.size();
  require(latent.value().rows() == visible + 1, ErrorCode::Contract,
          "latent sequence length " + std::to_string(latent.value().rows()) + " does not match the mask plan");

  Reconstruction<T> r;
  std::vector<std::size_t> pos_rows;
  auto slot = [&](std::size_t s, bool local, bool masked) {
    r.segments.push_back(s);
    r.local.push_back(local);
    r.masked.push_back(masked);
    pos_rows.push_back(local ? decoder_local_row(cfg, plan.region_offset, s) : decoder_global_row(s));
  };
  for (auto s : vis_global) slot(s, false, false);
  for (auto s : vis_local) slot(s, true, false);
  if (uses_global(cfg)) {
    for (auto s : plan.global_masked) slot(s, false, true);
  }
  if (uses_local(cfg)) {
    for (auto s : plan.local_masked) slot(s, true, true);
  }
  const std::size_t masked = r.segments.size() - visible;

  std::vector<std::size_t> body(visible);
  for (std::size_t i = 0; i < visible; ++i) body[i] = i + 1;
  std::vector<Var<T>> parts{tensor::linear(tensor::gather_rows(latent, body), p.dec_proj_w, p.dec_proj_b)};
  if (masked > 0) parts.push_back(tensor::gather_rows(p.mask_token, std::vector<std::size_t>(masked, 0)));
  Var<T> z = tensor::add(tensor::concat_rows(parts), tensor::gather_rows(p.dec_pos, pos_rows));
  const T eps = static_cast<T>(cfg.layer_norm_eps);
  z = run_block(z, p.decoder, cfg.decoder_heads, eps);
  if (p.dec_norm_gamma.valid()) z = tensor::layer_norm(z, p.dec_norm_gamma, p.dec_norm_beta, eps);
  r.decoder_length = r.segments.size();

  std::vector<std::size_t> out_rows;
  for (std::size_t i = 0; i < r.segments.size(); ++i) {
    if (cfg.ablation.loss_all_segments || r.masked[i]) out_rows.push_back(i);
  }
  require(!out_rows.empty(), ErrorCode::Contract, "mask plan selects nothing to reconstruct");
  auto keep = [&](auto& v) {
    std::remove_reference_t<decltype(v)> kept;
    for (auto i : out_rows) kept.push_back(v[i]);
    v = std::move(kept);
  };
  keep(r.segments);
  keep(r.local);
  keep(r.masked);
  r.values = tensor::linear(tensor::gather_rows(z, out_rows), p.out_w, p.out_b);
  return r;
}

template <typename T>
Tensor<T> reconstruction_targets(const Reconstruction<T>& recon, const Tensor<T>& patches, const ModelConfig& cfg) {
  const std::size_t n = recon.segments.size(), ps = cfg.patch_size();
  Tensor<T> out({n, ps});
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t s = recon.segments[i];
    require(s >= 1 && s <= patches.rows(), ErrorCode::Contract, "reconstruction row refers to a missing segment");
    const auto f = data::normalize_segment<T>(std::span<const T>(patches.row(s - 1), ps), cfg.leads, cfg.normalization);
    std::copy(f.begin(), f.end(), out.row(i));
  }
  return out;
}

template <typename T>
LossVars<T> reconstruction_loss(const Reconstruction<T>& recon, const Tensor<T>& patches, const ModelConfig& cfg) {
  Tape<T>& tape = *recon.values.tape;
  const Tensor<T> targets = reconstruction_targets(recon, patches, cfg);
  const std::size_t ps = targets.cols();
  auto stream_loss = [&](bool local) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < recon.local.size(); ++i) {
      if (recon.local[i] == local) rows.push_back(i);
    }
    if (rows.empty()) return tape.constant(Tensor<T>({1}, T(0)));
    Tensor<T> t({rows.size(), ps});
    for (std::size_t i = 0; i < rows.size(); ++i) std::copy(targets.row(rows[i]), targets.row(rows[i]) + ps, t.row(i));
    return tensor::squared_error(tensor::gather_rows(recon.values, rows), std::move(t), cfg.loss_reduction);
  };
  LossVars<T> l;
  l.l_global = stream_loss(false);
  l.l_local = stream_loss(true);
  l.total = tensor::add(l.l_global, l.l_local);
  return l;
}

template <typename T>
ForwardPass<T> forward(const BoundParams<T>& p, const ModelConfig& cfg, const Tensor<T>& patches,
                       const MaskPlan& plan) {
  ForwardPass<T> f;
  f.latent = encode(p, cfg, patches, plan);
  f.recon = decode(p, cfg, f.latent, plan);
  f.loss = reconstruction_loss(f.recon, patches, cfg);
  return f;
}

template <typename T>
LossParts evaluate_loss(const ModelParams<T>& params, const ModelConfig& cfg, const Tensor<T>& patches,
                        const MaskPlan& plan) {
  Tape<T> tape;
  const auto bound = bind(tape, params, false);
  const auto f = forward(bound, cfg, patches, plan);
  return {double(f.loss.l_global.value()[0]), double(f.loss.l_local.value()[0]), double(f.loss.total.value()[0])};
}

#define MMAE_INSTANTIATE_MODEL(T)                                                                               \
  template BoundParams<T> bind<T>(Tape<T>&, const ModelParams<T>&, bool);                                       \
  template BoundParams<T> bind_leaves<T>(const ModelConfig&, std::span<const Var<T>>);                          \
  template Var<T> encode<T>(const BoundParams<T>&, const ModelConfig&, const Tensor<T>&, const MaskPlan&);      \
  template Reconstruction<T> decode<T>(const BoundParams<T>&, const ModelConfig&, Var<T>, const MaskPlan&);     \
  template Tensor<T> reconstruction_targets<T>(const Reconstruction<T>&, const Tensor<T>&, const ModelConfig&); \
  template LossVars<T> reconstruction_loss<T>(const Reconstruction<T>&, const Tensor<T>&, const ModelConfig&);  \
  template ForwardPass<T> forward<T>(const BoundParams<T>&, const ModelConfig&, const Tensor<T>&,               \
                                     const MaskPlan&);                                                          \
  template LossParts evaluate_loss<T>(const ModelParams<T>&, const ModelConfig&, const Tensor<T>&, const MaskPlan&);

MMAE_INSTANTIATE_MODEL(float)
MMAE_INSTANTIATE_MODEL(double)

}  // namespace mmae::model
