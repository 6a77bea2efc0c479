#include "app/ablation.hpp"

#include <algorithm>
#include <map>

#include "train/evaluate.hpp"

namespace mmae::app {

using nlohmann::json;

const std::vector<std::string>& known_variants() {
  static const std::vector<std::string> names{"full",          "global_only",      "local_only",
                                              "shared_pos_embed", "single_pool_mask", "loss_all_segments"};
  return names;
}

void apply_variant(model::ModelConfig& cfg, const std::string& v) {
  if (v == "full") return;
  if (v == "global_only") {
    cfg.ablation.streams = model::StreamMode::GlobalOnly;
  } else if (v == "local_only") {
    cfg.ablation.streams = model::StreamMode::LocalOnly;
  } else if (v == "shared_pos_embed") {
    cfg.ablation.shared_local_positions = true;
  } else if (v == "single_pool_mask") {
    cfg.ablation.single_pool_mask = true;
  } else if (v == "loss_all_segments") {
    cfg.ablation.loss_all_segments = true;
  } else {
    throw_error(ErrorCode::Config, "unknown ablation variant '" + v + "'");
  }
}

json run_ablation(const AblationRequest& req, const std::vector<data::EcgRecord>& train,
                  const std::vector<data::EcgRecord>& test, const ProgressFn& progress) {
  req.base.validate();
  for (const auto& v : req.variants) {
    model::ModelConfig probe = req.base.model;
    apply_variant(probe, v);
  }
  for (double t : req.thetas) require(t >= 0 && t <= 1, ErrorCode::Config, "theta values must lie in [0, 1]");
  for (auto h : req.passes) require(h >= 1, ErrorCode::Config, "H values must be at least 1");
  auto note = [&](const std::string& s) {
    if (progress) progress(s);
  };

  // Trained checkpoints keyed by their serialized model config.
  std::map<std::string, model::Checkpoint> trained;
  auto train_model = [&](const model::ModelConfig& cfg, const std::string& label) -> const model::Checkpoint& {
    const std::string key = json(cfg).dump();
    auto it = trained.find(key);
    if (it != trained.end()) return it->second;
    note("training " + label);
    auto result = train::fit(train, cfg, req.base.train);
    return trained.emplace(key, std::move(result.checkpoint)).first->second;
  };
  auto detect = [&](const model::Checkpoint& ckpt, const train::InferConfig& infer) {
    return train::evaluate(ckpt, test, infer, false).detection_auroc;
  };

  json out{{"variants", json::object()}};
  for (const auto& v : req.variants) {
    model::ModelConfig cfg = req.base.model;
    apply_variant(cfg, v);
    const auto& ckpt = train_model(cfg, v);
    const double a = detect(ckpt, req.base.infer);
    note(v + ": detection AUROC " + std::to_string(a));
    out["variants"][v] = {{"detection_auroc", a}, {"checkpoint_hash", model::checkpoint_hash(ckpt)}};
  }
  if (!req.thetas.empty()) {
    json sweep = json::array();
    for (double t : req.thetas) {
      model::ModelConfig cfg = req.base.model;
      cfg.mask_ratio = t;
      const auto& ckpt = train_model(cfg, "theta=" + std::to_string(t));
      const double a = detect(ckpt, req.base.infer);
      note("theta " + std::to_string(t) + ": detection AUROC " + std::to_string(a));
      sweep.push_back({{"theta", t}, {"detection_auroc", a}, {"checkpoint_hash", model::checkpoint_hash(ckpt)}});
    }
    out["theta_sweep"] = sweep;
  }
  if (!req.passes.empty()) {
    const auto& ckpt = train_model(req.base.model, "full");
    json points = json::array();
    for (auto h : req.passes) {
      train::InferConfig infer = req.base.infer;
      infer.passes = h;
      const double a = detect(ckpt, infer);
      note("H " + std::to_string(h) + ": detection AUROC " + std::to_string(a));
      points.push_back({{"H", h}, {"detection_auroc", a}});
    }
    out["H_sweep"] = {{"checkpoint_hash", model::checkpoint_hash(ckpt)}, {"points", points}};
  }
  return out;
}

}  // namespace mmae::app
