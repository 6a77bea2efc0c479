#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "data/record.hpp"
#include "model/checkpoint.hpp"
#include "model/masking.hpp"

namespace mmae::train {

enum class LocalMaskMode {
  // Successive passes draw local slots from random permutations of the
  // region, so H·R_m ≥ δ passes mask every local segment at least once.
  Permutation,
  // Each pass samples its local mask independently.
  Independent,
};

enum class PointNormalization {
  Passes,  // divide accumulated residuals by H·ν
  Visits,  // divide each point by how often it was reconstructed
};

struct InferConfig {
  std::size_t passes = 4;  // H
  LocalMaskMode local_mask_mode = LocalMaskMode::Permutation;
  PointNormalization point_normalization = PointNormalization::Passes;
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const InferConfig&) const = default;
};

void to_json(nlohmann::json& j, const InferConfig& c);
void from_json(const nlohmann::json& j, InferConfig& c);

struct PassRecord {
  std::size_t region_offset = 0;  // w_i
  std::size_t pass = 0;           // h, 1-based
  model::MaskPlan plan;
  double l_global = 0;
  double l_local = 0;
  double residual_sum = 0;  // Σ of unnormalised per-point squared residuals
};

struct AnomalyReport {
  std::string id;
  double sample_score = 0;               // A(X♯)
  tensor::Tensor<double> point_scores;   // K × Q
  std::size_t passes = 0;                // H
  std::size_t regions = 0;               // ν
  std::vector<PassRecord> breakdown;     // region-major, pass-minor
};

nlohmann::json report_to_json(const AnomalyReport& report, bool include_points);

// Mask plans for all ν·H passes of one record, in breakdown order.
std::vector<model::MaskPlan> inference_plans(const model::ModelConfig& cfg, const InferConfig& infer,
                                             std::uint64_t seed);

// Runs ν·H reconstruction passes and aggregates them into the sample score
// (mean of l_global + l_local) and point scores (squared residuals in
// normalised space mapped back to signal coordinates). `seed` selects the
// masks; `thread_cap` bounds pass-level parallelism (0 = default).
AnomalyReport anomaly_score(const model::Checkpoint& ckpt, const data::EcgRecord& record, const InferConfig& infer,
                            std::uint64_t seed, unsigned thread_cap = 0);

// Seed used for a record: depends on the infer seed and the record id only.
std::uint64_t record_seed(const InferConfig& infer, const std::string& id);

// Scores many records in parallel, each with record_seed().
std::vector<AnomalyReport> score_records(const model::Checkpoint& ckpt, const std::vector<data::EcgRecord>& records,
                                         const InferConfig& infer, unsigned thread_cap = 0);

}  // namespace mmae::train
