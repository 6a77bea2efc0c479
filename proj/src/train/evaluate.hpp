#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "train/scoring.hpp"

namespace mmae::train {

struct RecordScore {
  std::string id;
  data::Label label = data::Label::Unlabeled;
  double score = 0;
};

struct EvaluationReport {
  double detection_auroc = 0;
  std::optional<double> localization_auroc;
  std::size_t n_normal = 0;
  std::size_t n_abnormal = 0;
  std::vector<RecordScore> per_record;
};

nlohmann::json to_json(const EvaluationReport& r);

// Detection AUROC over labeled records (abnormal = positive). With
// `localization`, also the pooled point-level AUROC over every record that
// carries a point mask.
EvaluationReport evaluate(const model::Checkpoint& ckpt, const std::vector<data::EcgRecord>& records,
                          const InferConfig& infer, bool localization, unsigned thread_cap = 0);

// Point-level AUROC pooled over the masked records of a scored set.
double localization_auroc(const std::vector<data::EcgRecord>& records, const std::vector<AnomalyReport>& reports);

}  // namespace mmae::train
