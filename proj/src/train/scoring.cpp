#include "train/scoring.hpp"

#include "common/json_util.hpp"
#include "common/parallel.hpp"
#include "model/mmae.hpp"
#include "train/trainer.hpp"

namespace mmae::train {

using nlohmann::json;
using tensor::Tensor;

namespace {

enum SeedStream : std::uint64_t { kSlots = 0x10ca1, kPass = 0x9a55 };

struct PassOutput {
  PassRecord record;
  std::vector<std::size_t> segments;
  Tensor<float> residuals;  // rows × P
};

PassOutput run_pass(const model::Checkpoint& ckpt, const Tensor<float>& patches, const model::MaskPlan& plan) {
  const auto& cfg = ckpt.config;
  tensor::Tape<float> tape;
  const auto bound = model::bind(tape, ckpt.params, false);
  const auto f = model::forward(bound, cfg, patches, plan);
  PassOutput out;
  out.record.region_offset = plan.region_offset;
  out.record.plan = plan;
  out.record.l_global = f.loss.l_global.value()[0];
  out.record.l_local = f.loss.l_local.value()[0];
  out.segments = f.recon.segments;
  out.residuals = model::reconstruction_targets(f.recon, patches, cfg);
  auto r = out.residuals.data();
  const auto v = f.recon.values.value().data();
  double total = 0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    const float d = v[i] - r[i];
    r[i] = d * d;
    total += r[i];
  }
  out.record.residual_sum = total;
  return out;
}

}  // namespace

void InferConfig::validate() const { require(passes >= 1, ErrorCode::Config, "infer.passes (H) must be at least 1"); }

void to_json(json& j, const InferConfig& c) {
  j = json{{"passes", c.passes},
           {"local_mask_mode", c.local_mask_mode == LocalMaskMode::Independent ? "independent" : "permutation"},
           {"point_normalization", c.point_normalization == PointNormalization::Visits ? "visits" : "passes"},
           {"seed", c.seed}};
}

void from_json(const json& j, InferConfig& c) {
  JsonSection s(j, "infer");
  s.get("passes", c.passes);
  std::string text;
  if (s.has("local_mask_mode")) {
    s.get("local_mask_mode", text);
    require(text == "permutation" || text == "independent", ErrorCode::Config,
            "unknown infer.local_mask_mode '" + text + "'");
    c.local_mask_mode = text == "independent" ? LocalMaskMode::Independent : LocalMaskMode::Permutation;
  }
  if (s.has("point_normalization")) {
    s.get("point_normalization", text);
    require(text == "passes" || text == "visits", ErrorCode::Config,
            "unknown infer.point_normalization '" + text + "'");
    c.point_normalization = text == "visits" ? PointNormalization::Visits : PointNormalization::Passes;
  }
  s.get("seed", c.seed);
  s.finish();
}

json report_to_json(const AnomalyReport& r, bool include_points) {
  json breakdown = json::array();
  for (const auto& p : r.breakdown) {
    breakdown.push_back({{"region_offset", p.region_offset},
                         {"pass", p.pass},
                         {"l_global", p.l_global},
                         {"l_local", p.l_local},
                         {"global_masked", p.plan.global_masked},
                         {"local_masked", p.plan.local_masked}});
  }
  json j{{"id", r.id},
         {"sample_score", r.sample_score},
         {"passes", r.passes},
         {"regions", r.regions},
         {"breakdown", breakdown}};
  if (include_points) {
    json rows = json::array();
    for (std::size_t k = 0; k < r.point_scores.rows(); ++k) {
      rows.push_back(std::vector<double>(r.point_scores.row(k), r.point_scores.row(k) + r.point_scores.cols()));
    }
    j["point_scores"] = rows;
  }
  return j;
}

std::vector<model::MaskPlan> inference_plans(const model::ModelConfig& cfg, const InferConfig& infer,
                                             std::uint64_t seed) {
  cfg.validate();
  infer.validate();
  std::vector<model::MaskPlan> plans;
  const std::size_t r_m = model::masked_count(cfg.region_length, cfg.mask_ratio, cfg.rounding);
  for (std::size_t i = 0; i < cfg.regions(); ++i) {
    const std::size_t w = cfg.region_offsets[i];
    model::Rng slot_rng(derive_seed(seed, i, kSlots));
    model::LocalSlotSchedule slots(cfg.region_length, slot_rng);
    for (std::size_t h = 0; h < infer.passes; ++h) {
      model::Rng rng(derive_seed(seed, i, h, kPass));
      if (cfg.ablation.single_pool_mask || infer.local_mask_mode == LocalMaskMode::Independent) {
        plans.push_back(model::sample_plan_for(cfg, w, rng));
      } else {
        plans.push_back(model::plan_with_local_positions(cfg.segments, cfg.region_length, cfg.mask_ratio, w,
                                                         slots.next(r_m), rng, cfg.rounding));
      }
    }
  }
  return plans;
}

AnomalyReport anomaly_score(const model::Checkpoint& ckpt, const data::EcgRecord& record, const InferConfig& infer,
                            std::uint64_t seed, unsigned thread_cap) {
  const auto& cfg = ckpt.config;
  const Tensor<float> patches = record_patches(record, cfg);
  const auto plans = inference_plans(cfg, infer, seed);

  std::vector<PassOutput> outputs(plans.size());
  parallel_for(plans.size(), [&](std::size_t i) { outputs[i] = run_pass(ckpt, patches, plans[i]); }, thread_cap);

  AnomalyReport report;
  report.id = record.id;
  report.passes = infer.passes;
  report.regions = cfg.regions();
  report.point_scores = Tensor<double>({record.leads(), record.samples()});
  Tensor<double> visits({record.leads(), record.samples()});
  const std::size_t len = cfg.segment_length;
  double total = 0;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    auto& out = outputs[i];
    out.record.pass = i % infer.passes + 1;
    total += out.record.l_global + out.record.l_local;
    for (std::size_t row = 0; row < out.segments.size(); ++row) {
      const float* res = out.residuals.row(row);
      const std::size_t start = (out.segments[row] - 1) * len;
      for (std::size_t k = 0; k < cfg.leads; ++k) {
        for (std::size_t q = 0; q < len; ++q) {
          report.point_scores(k, start + q) += res[k * len + q];
          visits(k, start + q) += 1;
        }
      }
    }
    report.breakdown.push_back(std::move(out.record));
  }
  report.sample_score = total / double(outputs.size());
  auto scores = report.point_scores.data();
  if (infer.point_normalization == PointNormalization::Passes) {
    const double hv = double(outputs.size());
    for (auto& s : scores) s /= hv;
  } else {
    const auto v = visits.data();
    for (std::size_t i = 0; i < scores.size(); ++i) scores[i] = v[i] > 0 ? scores[i] / v[i] : 0.0;
  }
  return report;
}

std::uint64_t record_seed(const InferConfig& infer, const std::string& id) {
  return derive_seed(infer.seed, fnv1a(id.data(), id.size()));
}

std::vector<AnomalyReport> score_records(const model::Checkpoint& ckpt, const std::vector<data::EcgRecord>& records,
                                         const InferConfig& infer, unsigned thread_cap) {
  std::vector<AnomalyReport> reports(records.size());
  parallel_for(
      records.size(),
      [&](std::size_t i) { reports[i] = anomaly_score(ckpt, records[i], infer, record_seed(infer, records[i].id), 1); },
      thread_cap);
  return reports;
}

}  // namespace mmae::train
