#include "model/config.hpp"

#include "common/json_util.hpp"

namespace mmae::model {

using nlohmann::json;

namespace {

std::string rounding_name(Rounding r) { return r == Rounding::Floor ? "floor" : "half_up"; }

Rounding parse_rounding(const std::string& s) {
  if (s == "half_up") return Rounding::HalfUp;
  if (s == "floor") return Rounding::Floor;
  throw_error(ErrorCode::Config, "unknown rounding '" + s + "'");
}

std::string reduction_name(tensor::Reduction r) { return r == tensor::Reduction::Sum ? "sum" : "mean"; }

tensor::Reduction parse_reduction(const std::string& s) {
  if (s == "mean") return tensor::Reduction::Mean;
  if (s == "sum") return tensor::Reduction::Sum;
  throw_error(ErrorCode::Config, "unknown loss reduction '" + s + "'");
}

}  // namespace

std::string to_string(StreamMode m) {
  switch (m) {
    case StreamMode::Both: return "both";
    case StreamMode::GlobalOnly: return "global_only";
    case StreamMode::LocalOnly: return "local_only";
  }
  return "both";
}

StreamMode parse_stream_mode(const std::string& s) {
  if (s == "both") return StreamMode::Both;
  if (s == "global_only") return StreamMode::GlobalOnly;
  if (s == "local_only") return StreamMode::LocalOnly;
  throw_error(ErrorCode::Config, "unknown stream mode '" + s + "'");
}

void ModelConfig::validate() const {
  require(leads >= 1 && segment_length >= 1, ErrorCode::Config, "leads and segment length must be positive");
  require(segments >= 2, ErrorCode::Config, "at least two segments are required");
  require(region_length >= 2 && region_length <= segments, ErrorCode::Config,
          "region length must lie in [2, T]");
  require(!region_offsets.empty(), ErrorCode::Config, "at least one local region offset is required");
  for (std::size_t i = 0; i < region_offsets.size(); ++i) {
    require(region_offsets[i] + region_length <= segments, ErrorCode::Config,
            "region offset " + std::to_string(region_offsets[i]) + " exceeds T − δ");
    require(i == 0 || region_offsets[i] > region_offsets[i - 1], ErrorCode::Config,
            "region offsets must be strictly increasing");
  }
  require(embed_dim >= 1 && decoder_dim >= 1 && depth >= 1, ErrorCode::Config, "dimensions and depth must be positive");
  require(encoder_heads >= 1 && embed_dim % encoder_heads == 0, ErrorCode::Config,
          "embed_dim " + std::to_string(embed_dim) + " is not divisible by " + std::to_string(encoder_heads) +
              " encoder heads");
  require(decoder_heads >= 1 && decoder_dim % decoder_heads == 0, ErrorCode::Config,
          "decoder_dim " + std::to_string(decoder_dim) + " is not divisible by " + std::to_string(decoder_heads) +
              " decoder heads");
  require(mlp_ratio >= 1, ErrorCode::Config, "mlp_ratio must be at least 1");
  require(mask_ratio >= 0 && mask_ratio <= 1, ErrorCode::Config, "mask ratio must lie in [0, 1]");
  require(layer_norm_eps > 0 && normalization.eps > 0, ErrorCode::Config, "eps values must be positive");
  require(init_std > 0, ErrorCode::Config, "init_std must be positive");
}

void to_json(json& j, const ModelConfig& c) {
  j = json{
      {"leads", c.leads},
      {"segment_length", c.segment_length},
      {"segments", c.segments},
      {"region_length", c.region_length},
      {"region_offsets", c.region_offsets},
      {"embed_dim", c.embed_dim},
      {"decoder_dim", c.decoder_dim},
      {"depth", c.depth},
      {"encoder_heads", c.encoder_heads},
      {"decoder_heads", c.decoder_heads},
      {"mlp_ratio", c.mlp_ratio},
      {"mask_ratio", c.mask_ratio},
      {"rounding", rounding_name(c.rounding)},
      {"final_encoder_norm", c.final_encoder_norm},
      {"decoder_output_norm", c.decoder_output_norm},
      {"layer_norm_eps", c.layer_norm_eps},
      {"init_std", c.init_std},
      {"loss_reduction", reduction_name(c.loss_reduction)},
      {"normalization",
       {{"scope", c.normalization.scope == data::NormalizationScope::PerLead ? "per_lead" : "segment"},
        {"variance", c.normalization.variance == data::VarianceKind::Sample ? "sample" : "population"},
        {"eps", c.normalization.eps}}},
      {"ablation",
       {{"streams", to_string(c.ablation.streams)},
        {"shared_local_positions", c.ablation.shared_local_positions},
        {"single_pool_mask", c.ablation.single_pool_mask},
        {"loss_all_segments", c.ablation.loss_all_segments}}},
  };
}

void from_json(const json& j, ModelConfig& c) {
  JsonSection s(j, "model");
  s.get("leads", c.leads);
  s.get("segment_length", c.segment_length);
  s.get("segments", c.segments);
  s.get("region_length", c.region_length);
  s.get("region_offsets", c.region_offsets);
  s.get("embed_dim", c.embed_dim);
  s.get("decoder_dim", c.decoder_dim);
  s.get("depth", c.depth);
  s.get("encoder_heads", c.encoder_heads);
  s.get("decoder_heads", c.decoder_heads);
  s.get("mlp_ratio", c.mlp_ratio);
  s.get("mask_ratio", c.mask_ratio);
  std::string text;
  if (s.has("rounding")) {
    s.get("rounding", text);
    c.rounding = parse_rounding(text);
  }
  s.get("final_encoder_norm", c.final_encoder_norm);
  s.get("decoder_output_norm", c.decoder_output_norm);
  s.get("layer_norm_eps", c.layer_norm_eps);
  s.get("init_std", c.init_std);
  if (s.has("loss_reduction")) {
    s.get("loss_reduction", text);
    c.loss_reduction = parse_reduction(text);
  }
  if (s.has("normalization")) {
    JsonSection n(s.at("normalization"), "model.normalization");
    if (n.has("scope")) {
      n.get("scope", text);
      require(text == "segment" || text == "per_lead", ErrorCode::Config, "unknown normalization scope '" + text + "'");
      c.normalization.scope = text == "per_lead" ? data::NormalizationScope::PerLead : data::NormalizationScope::Segment;
    }
    if (n.has("variance")) {
      n.get("variance", text);
      require(text == "population" || text == "sample", ErrorCode::Config, "unknown variance kind '" + text + "'");
      c.normalization.variance = text == "sample" ? data::VarianceKind::Sample : data::VarianceKind::Population;
    }
    n.get("eps", c.normalization.eps);
    n.finish();
  }
  if (s.has("ablation")) {
    JsonSection a(s.at("ablation"), "model.ablation");
    if (a.has("streams")) {
      a.get("streams", text);
      c.ablation.streams = parse_stream_mode(text);
    }
    a.get("shared_local_positions", c.ablation.shared_local_positions);
    a.get("single_pool_mask", c.ablation.single_pool_mask);
    a.get("loss_all_segments", c.ablation.loss_all_segments);
    a.finish();
  }
  s.finish();
}

}  // namespace mmae::model
