#include "model/params.hpp"

#include <random>

namespace mmae::model {

namespace {

template <typename P, typename B>
void list_block(std::vector<std::pair<std::string, P>>& out, const std::string& prefix, B& b) {
  out.emplace_back(prefix + ".ln1.gamma", &b.ln1_gamma);
  out.emplace_back(prefix + ".ln1.beta", &b.ln1_beta);
  out.emplace_back(prefix + ".attn.qkv.weight", &b.qkv_w);
  out.emplace_back(prefix + ".attn.qkv.bias", &b.qkv_b);
  out.emplace_back(prefix + ".attn.out.weight", &b.out_w);
  out.emplace_back(prefix + ".attn.out.bias", &b.out_b);
  out.emplace_back(prefix + ".ln2.gamma", &b.ln2_gamma);
  out.emplace_back(prefix + ".ln2.beta", &b.ln2_beta);
  out.emplace_back(prefix + ".mlp.fc1.weight", &b.fc1_w);
  out.emplace_back(prefix + ".mlp.fc1.bias", &b.fc1_b);
  out.emplace_back(prefix + ".mlp.fc2.weight", &b.fc2_w);
  out.emplace_back(prefix + ".mlp.fc2.bias", &b.fc2_b);
}

template <typename P, typename M>
std::vector<std::pair<std::string, P>> list_all(M& m) {
  std::vector<std::pair<std::string, P>> out;
  out.emplace_back("patch.weight", &m.patch_w);
  out.emplace_back("patch.bias", &m.patch_b);
  out.emplace_back("aux_token", &m.aux);
  out.emplace_back("encoder.pos", &m.enc_pos);
  for (std::size_t i = 0; i < m.encoder.size(); ++i) list_block(out, "encoder.block" + std::to_string(i), m.encoder[i]);
  if (!m.enc_norm_gamma.empty()) {
    out.emplace_back("encoder.norm.gamma", &m.enc_norm_gamma);
    out.emplace_back("encoder.norm.beta", &m.enc_norm_beta);
  }
  out.emplace_back("decoder.proj.weight", &m.dec_proj_w);
  out.emplace_back("decoder.proj.bias", &m.dec_proj_b);
  out.emplace_back("decoder.mask_token", &m.mask_token);
  out.emplace_back("decoder.pos", &m.dec_pos);
  list_block(out, "decoder.block", m.decoder);
  if (!m.dec_norm_gamma.empty()) {
    out.emplace_back("decoder.norm.gamma", &m.dec_norm_gamma);
    out.emplace_back("decoder.norm.beta", &m.dec_norm_beta);
  }
  out.emplace_back("output.weight", &m.out_w);
  out.emplace_back("output.bias", &m.out_b);
  return out;
}

template <typename T>
BlockParams<T> make_block(std::size_t d, std::size_t ratio) {
  BlockParams<T> b;
  b.ln1_gamma = Tensor<T>({d}, T(1));
  b.ln1_beta = Tensor<T>({d});
  b.qkv_w = Tensor<T>({d, 3 * d});
  b.qkv_b = Tensor<T>({3 * d});
  b.out_w = Tensor<T>({d, d});
  b.out_b = Tensor<T>({d});
  b.ln2_gamma = Tensor<T>({d}, T(1));
  b.ln2_beta = Tensor<T>({d});
  b.fc1_w = Tensor<T>({d, ratio * d});
  b.fc1_b = Tensor<T>({ratio * d});
  b.fc2_w = Tensor<T>({ratio * d, d});
  b.fc2_b = Tensor<T>({d});
  return b;
}

template <typename U, typename T>
BlockParams<U> cast_block(const BlockParams<T>& b) {
  return {b.ln1_gamma.template cast<U>(), b.ln1_beta.template cast<U>(), b.qkv_w.template cast<U>(),
          b.qkv_b.template cast<U>(),     b.out_w.template cast<U>(),    b.out_b.template cast<U>(),
          b.ln2_gamma.template cast<U>(), b.ln2_beta.template cast<U>(), b.fc1_w.template cast<U>(),
          b.fc1_b.template cast<U>(),     b.fc2_w.template cast<U>(),    b.fc2_b.template cast<U>()};
}

template <typename U, typename T>
Tensor<U> cast_opt(const Tensor<T>& t) {
  return t.empty() ? Tensor<U>() : t.template cast<U>();
}

bool is_normal_init(const std::string& name) {
  auto ends_with = [&](const char* s) {
    const std::string suffix(s);
    return name.size() >= suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  return ends_with(".weight") || ends_with("pos") || ends_with("_token");
}

}  // namespace

template <typename T>
std::vector<std::pair<std::string, Tensor<T>*>> ModelParams<T>::named() {
  return list_all<Tensor<T>*>(*this);
}

template <typename T>
std::vector<std::pair<std::string, const Tensor<T>*>> ModelParams<T>::named() const {
  return list_all<const Tensor<T>*>(*this);
}

template <typename T>
std::size_t ModelParams<T>::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : named()) n += t->size();
  return n;
}

template <typename T>
template <typename U>
ModelParams<U> ModelParams<T>::cast() const {
  ModelParams<U> m;
  m.patch_w = patch_w.template cast<U>();
  m.patch_b = patch_b.template cast<U>();
  m.aux = aux.template cast<U>();
  m.enc_pos = enc_pos.template cast<U>();
  for (const auto& b : encoder) m.encoder.push_back(cast_block<U>(b));
  m.enc_norm_gamma = cast_opt<U>(enc_norm_gamma);
  m.enc_norm_beta = cast_opt<U>(enc_norm_beta);
  m.dec_proj_w = dec_proj_w.template cast<U>();
  m.dec_proj_b = dec_proj_b.template cast<U>();
  m.mask_token = mask_token.template cast<U>();
  m.dec_pos = dec_pos.template cast<U>();
  m.decoder = cast_block<U>(decoder);
  m.dec_norm_gamma = cast_opt<U>(dec_norm_gamma);
  m.dec_norm_beta = cast_opt<U>(dec_norm_beta);
  m.out_w = out_w.template cast<U>();
  m.out_b = out_b.template cast<U>();
  return m;
}

template <typename T>
ModelParams<T> zero_params(const ModelConfig& cfg) {
  cfg.validate();
  const std::size_t p = cfg.patch_size(), d = cfg.embed_dim, dd = cfg.decoder_dim;
  const std::size_t t = cfg.segments, delta = cfg.region_length;
  ModelParams<T> m;
  m.patch_w = Tensor<T>({p, d});
  m.patch_b = Tensor<T>({d});
  m.aux = Tensor<T>({1, d});
  m.enc_pos = Tensor<T>({t + delta + 1, d});
  for (std::size_t i = 0; i < cfg.depth; ++i) m.encoder.push_back(make_block<T>(d, cfg.mlp_ratio));
  if (cfg.final_encoder_norm) {
    m.enc_norm_gamma = Tensor<T>({d}, T(1));
    m.enc_norm_beta = Tensor<T>({d});
  }
  m.dec_proj_w = Tensor<T>({d, dd});
  m.dec_proj_b = Tensor<T>({dd});
  m.mask_token = Tensor<T>({1, dd});
  m.dec_pos = Tensor<T>({t + delta, dd});
  m.decoder = make_block<T>(dd, cfg.mlp_ratio);
  if (cfg.decoder_output_norm) {
    m.dec_norm_gamma = Tensor<T>({dd}, T(1));
    m.dec_norm_beta = Tensor<T>({dd});
  }
  m.out_w = Tensor<T>({dd, p});
  m.out_b = Tensor<T>({p});
  return m;
}

std::vector<std::pair<std::string, tensor::Shape>> parameter_shapes(const ModelConfig& cfg) {
  std::vector<std::pair<std::string, tensor::Shape>> out;
  // Cheap enough: the largest tensor is P × D floats.
  const auto m = zero_params<float>(cfg);
  for (const auto& [name, t] : m.named()) out.emplace_back(name, t->shape());
  return out;
}

ModelParams<float> init_params(const ModelConfig& cfg, std::uint64_t seed) {
  ModelParams<float> m = zero_params<float>(cfg);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& [name, t] : m.named()) {
    if (!is_normal_init(name)) continue;
    for (auto& v : t->data()) {
      double z = normal(rng);
      while (std::abs(z) > 2.0) z = normal(rng);
      v = static_cast<float>(z * cfg.init_std);
    }
  }
  return m;
}

template struct ModelParams<float>;
template struct ModelParams<double>;
template ModelParams<double> ModelParams<float>::cast<double>() const;
template ModelParams<float> ModelParams<double>::cast<float>() const;
template ModelParams<float> zero_params<float>(const ModelConfig&);
template ModelParams<double> zero_params<double>(const ModelConfig&);

}  // namespace mmae::model
