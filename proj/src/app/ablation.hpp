#pragma once

#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "app/run_config.hpp"

namespace mmae::app {

// full, global_only, local_only, shared_pos_embed, single_pool_mask,
// loss_all_segments.
const std::vector<std::string>& known_variants();

// Applies one named variant on top of cfg; unknown names are config errors.
void apply_variant(model::ModelConfig& cfg, const std::string& variant);

struct AblationRequest {
  RunConfig base;
  std::vector<std::string> variants{"full"};
  std::vector<double> thetas;         // mask-ratio sweep; each value retrains the full model
  std::vector<std::size_t> passes;    // H sweep; re-scores the full checkpoint
};

using ProgressFn = std::function<void(const std::string&)>;

// Trains and evaluates each variant with the shared train seed. Output:
// {"variants": {name: {"detection_auroc", "checkpoint_hash"}},
//  "theta_sweep": [{"theta", "detection_auroc", "checkpoint_hash"}],
//  "H_sweep": {"checkpoint_hash", "points": [{"H", "detection_auroc"}]}}
nlohmann::json run_ablation(const AblationRequest& request, const std::vector<data::EcgRecord>& train,
                            const std::vector<data::EcgRecord>& test, const ProgressFn& progress = {});

}  // namespace mmae::app
