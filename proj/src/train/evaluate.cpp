#include "train/evaluate.hpp"

#include "train/auroc.hpp"

namespace mmae::train {

using nlohmann::json;

json to_json(const EvaluationReport& r) {
  json per_record = json::array();
  for (const auto& s : r.per_record) {
    per_record.push_back({{"id", s.id}, {"label", data::to_string(s.label)}, {"score", s.score}});
  }
  json j{{"detection_auroc", r.detection_auroc},
         {"n_normal", r.n_normal},
         {"n_abnormal", r.n_abnormal},
         {"per_record", per_record}};
  if (r.localization_auroc) j["localization_auroc"] = *r.localization_auroc;
  return j;
}

double localization_auroc(const std::vector<data::EcgRecord>& records, const std::vector<AnomalyReport>& reports) {
  require(records.size() == reports.size(), ErrorCode::Contract, "one report per record is required");
  std::vector<double> scores;
  std::vector<std::uint8_t> labels;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!records[i].point_mask) continue;
    const auto& mask = *records[i].point_mask;
    const auto s = reports[i].point_scores.data();
    require(s.size() == mask.size(), ErrorCode::Contract, "point scores and mask differ in size");
    scores.insert(scores.end(), s.begin(), s.end());
    labels.insert(labels.end(), mask.begin(), mask.end());
  }
  require(!scores.empty(), ErrorCode::Metric, "localization needs records with point masks");
  return auroc(scores, labels);
}

EvaluationReport evaluate(const model::Checkpoint& ckpt, const std::vector<data::EcgRecord>& records,
                          const InferConfig& infer, bool localization, unsigned thread_cap) {
  const auto reports = score_records(ckpt, records, infer, thread_cap);
  EvaluationReport out;
  std::vector<double> scores;
  std::vector<std::uint8_t> labels;
  for (std::size_t i = 0; i < records.size(); ++i) {
    out.per_record.push_back({records[i].id, records[i].label, reports[i].sample_score});
    if (records[i].label == data::Label::Unlabeled) continue;
    const bool abnormal = records[i].label == data::Label::Abnormal;
    (abnormal ? out.n_abnormal : out.n_normal) += 1;
    scores.push_back(reports[i].sample_score);
    labels.push_back(abnormal ? 1 : 0);
  }
  out.detection_auroc = auroc(scores, labels);
  if (localization) out.localization_auroc = localization_auroc(records, reports);
  return out;
}

}  // namespace mmae::train
