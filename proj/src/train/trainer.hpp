#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "data/record.hpp"
#include "model/checkpoint.hpp"
#include "model/mmae.hpp"

namespace mmae::train {

struct TrainConfig {
  std::size_t batch_size = 256;
  std::size_t epochs = 300;
  std::size_t warmup_epochs = 40;
  double base_lr = 1e-3;
  double min_lr = 0.0;
  double weight_decay = 0.05;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
  // Write an intermediate checkpoint every N epochs (0 = only at the end).
  std::size_t checkpoint_every = 0;
  // Single-threaded execution.
  bool deterministic = false;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

struct EpochStats {
  std::size_t epoch = 0;  // 1-based
  double mean_loss = 0;
  double lr = 0;  // rate used by the epoch's last step
};

// One JSON object per line: {"epoch", "mean_loss", "lr"}.
std::string history_jsonl(const std::vector<EpochStats>& history);

// Called after every epoch with the current parameters.
using EpochCallback = std::function<void(const EpochStats&, const model::ModelParams<float>&)>;

struct TrainResult {
  model::Checkpoint checkpoint;
  std::vector<EpochStats> history;
};

// Minibatch AdamW training. Each batch shares one uniformly drawn region
// offset; every record gets its own mask plan; the batch loss is the mean
// of l^w. Abnormal records are rejected.
TrainResult fit(const std::vector<data::EcgRecord>& records, const model::ModelConfig& cfg, const TrainConfig& tc,
                const EpochCallback& on_epoch = {});

// Segment grid of a record as a T × P tensor, checked against cfg.
tensor::Tensor<float> record_patches(const data::EcgRecord& record, const model::ModelConfig& cfg);

// Loss and parameter gradients (named() order) of one record under one plan.
struct RecordGradient {
  model::LossParts loss;
  std::vector<tensor::Tensor<float>> grads;
};
RecordGradient record_gradient(const model::ModelParams<float>& params, const model::ModelConfig& cfg,
                               const tensor::Tensor<float>& patches, const model::MaskPlan& plan);

}  // namespace mmae::train
