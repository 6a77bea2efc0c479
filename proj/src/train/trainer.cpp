#include "train/trainer.hpp"

#include <algorithm>
#include <numeric>

#include "common/json_util.hpp"
#include "common/parallel.hpp"
#include "data/segment.hpp"
#include "model/mmae.hpp"
#include "train/optimizer.hpp"

namespace mmae::train {

using nlohmann::json;
using tensor::Tensor;

namespace {

// Records per gradient block. Blocks are summed internally in record order
// and then across blocks in block order, so the float sum is fixed no matter
// how many threads run.
constexpr std::size_t kBlock = 8;

enum SeedStream : std::uint64_t { kInit = 0x1417, kShuffle = 1, kRegion = 2, kPlan = 3 };

void add_into(std::vector<Tensor<float>>& acc, const std::vector<Tensor<float>>& g) {
  if (acc.empty()) {
    acc = g;
    return;
  }
  for (std::size_t i = 0; i < acc.size(); ++i) {
    auto a = acc[i].data();
    auto b = g[i].data();
    for (std::size_t j = 0; j < a.size(); ++j) a[j] += b[j];
  }
}

}  // namespace

void TrainConfig::validate() const {
  require(batch_size >= 1, ErrorCode::Config, "batch_size must be at least 1");
  require(epochs == 0 || warmup_epochs < epochs, ErrorCode::Config, "warmup_epochs must be smaller than epochs");
  require(base_lr > 0, ErrorCode::Config, "base_lr must be positive");
  require(min_lr >= 0 && min_lr <= base_lr, ErrorCode::Config, "min_lr must lie in [0, base_lr]");
  require(weight_decay >= 0, ErrorCode::Config, "weight_decay must be non-negative");
  require(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1, ErrorCode::Config, "betas must lie in [0, 1)");
  require(adam_eps > 0, ErrorCode::Config, "adam_eps must be positive");
}

void to_json(json& j, const TrainConfig& c) {
  j = json{{"batch_size", c.batch_size},
           {"epochs", c.epochs},
           {"warmup_epochs", c.warmup_epochs},
           {"base_lr", c.base_lr},
           {"min_lr", c.min_lr},
           {"weight_decay", c.weight_decay},
           {"betas", {c.beta1, c.beta2}},
           {"adam_eps", c.adam_eps},
           {"seed", c.seed},
           {"checkpoint_every", c.checkpoint_every},
           {"deterministic", c.deterministic}};
}

void from_json(const json& j, TrainConfig& c) {
  JsonSection s(j, "train");
  s.get("batch_size", c.batch_size);
  s.get("epochs", c.epochs);
  s.get("warmup_epochs", c.warmup_epochs);
  s.get("base_lr", c.base_lr);
  s.get("min_lr", c.min_lr);
  s.get("weight_decay", c.weight_decay);
  if (s.has("betas")) {
    std::vector<double> betas;
    s.get("betas", betas);
    require(betas.size() == 2, ErrorCode::Config, "train.betas must hold two numbers");
    c.beta1 = betas[0];
    c.beta2 = betas[1];
  }
  s.get("adam_eps", c.adam_eps);
  s.get("seed", c.seed);
  s.get("checkpoint_every", c.checkpoint_every);
  s.get("deterministic", c.deterministic);
  s.finish();
}

std::string history_jsonl(const std::vector<EpochStats>& history) {
  std::string out;
  for (const auto& e : history) {
    out += json{{"epoch", e.epoch}, {"mean_loss", e.mean_loss}, {"lr", e.lr}}.dump();
    out += '\n';
  }
  return out;
}

Tensor<float> record_patches(const data::EcgRecord& record, const model::ModelConfig& cfg) {
  require(record.leads() == cfg.leads, ErrorCode::Contract,
          "record '" + record.id + "' has " + std::to_string(record.leads()) + " leads, model expects " +
              std::to_string(cfg.leads));
  require(record.samples() == cfg.samples(), ErrorCode::Contract,
          "record '" + record.id + "' has " + std::to_string(record.samples()) + " samples, model expects " +
              std::to_string(cfg.samples()));
  return data::segment_record(record, cfg.segments).patches;
}

RecordGradient record_gradient(const model::ModelParams<float>& params, const model::ModelConfig& cfg,
                               const Tensor<float>& patches, const model::MaskPlan& plan) {
  tensor::Tape<float> tape;
  const auto bound = model::bind(tape, params, true);
  const auto pass = model::forward(bound, cfg, patches, plan);
  RecordGradient out;
  out.loss = {pass.loss.l_global.value()[0], pass.loss.l_local.value()[0], pass.loss.total.value()[0]};
  auto grads = tape.backward(pass.loss.total);
  out.grads.reserve(bound.leaves.size());
  for (const auto& leaf : bound.leaves) out.grads.push_back(std::move(grads.at(leaf)));
  return out;
}

TrainResult fit(const std::vector<data::EcgRecord>& records, const model::ModelConfig& cfg, const TrainConfig& tc,
                const EpochCallback& on_epoch) {
  cfg.validate();
  tc.validate();
  std::vector<Tensor<float>> patches;
  patches.reserve(records.size());
  for (const auto& r : records) {
    require(r.label != data::Label::Abnormal, ErrorCode::Validation,
            "training data must be normal; record '" + r.id + "' is labeled abnormal");
    patches.push_back(record_patches(r, cfg));
  }
  require(tc.epochs == 0 || !records.empty(), ErrorCode::Config, "no training records");

  TrainResult result;
  result.checkpoint.config = cfg;
  result.checkpoint.params = model::init_params(cfg, derive_seed(tc.seed, kInit));
  auto& params = result.checkpoint.params;
  std::vector<Tensor<float>*> tensors;
  for (auto& [name, t] : params.named()) tensors.push_back(t);
  OptimizerState state = make_optimizer_state(tensors);

  const std::size_t n = records.size();
  const std::size_t batches = n == 0 ? 0 : (n + tc.batch_size - 1) / tc.batch_size;
  const std::uint64_t total_steps = std::uint64_t(batches) * tc.epochs;
  const std::uint64_t warmup_steps = std::uint64_t(batches) * tc.warmup_epochs;
  const unsigned cap = tc.deterministic ? 1 : 0;
  AdamWOptions opt{tc.base_lr, tc.weight_decay, tc.beta1, tc.beta2, tc.adam_eps};

  std::vector<std::size_t> order(n);
  for (std::size_t epoch = 0; epoch < tc.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    model::Rng shuffle_rng(derive_seed(tc.seed, epoch, kShuffle));
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0;
    for (std::size_t b = 0; b < batches; ++b) {
      const std::size_t first = b * tc.batch_size;
      const std::size_t count = std::min(tc.batch_size, n - first);
      model::Rng region_rng(derive_seed(tc.seed, epoch, b, kRegion));
      std::uniform_int_distribution<std::size_t> pick(0, cfg.region_offsets.size() - 1);
      const std::size_t w = cfg.region_offsets[pick(region_rng)];

      const std::size_t blocks = (count + kBlock - 1) / kBlock;
      std::vector<std::vector<Tensor<float>>> block_grads(blocks);
      std::vector<double> block_loss(blocks, 0.0);
      parallel_for(
          blocks,
          [&](std::size_t k) {
            for (std::size_t i = k * kBlock; i < std::min(count, (k + 1) * kBlock); ++i) {
              model::Rng plan_rng(derive_seed(tc.seed, epoch, b, i, kPlan));
              const auto plan = model::sample_plan_for(cfg, w, plan_rng);
              auto g = record_gradient(params, cfg, patches[order[first + i]], plan);
              block_loss[k] += g.loss.total;
              add_into(block_grads[k], g.grads);
            }
          },
          cap);
      std::vector<Tensor<float>> grads;
      double batch_loss = 0;
      for (std::size_t k = 0; k < blocks; ++k) {
        add_into(grads, block_grads[k]);
        batch_loss += block_loss[k];
      }
      const float inv = 1.0f / float(count);
      for (auto& g : grads) {
        for (auto& v : g.data()) v *= inv;
      }
      opt.lr = lr_schedule(state.step, total_steps, warmup_steps, tc.base_lr, tc.min_lr);
      adamw_step(tensors, grads, state, opt);
      loss_sum += batch_loss;
    }
    EpochStats stats{epoch + 1, loss_sum / double(n), opt.lr};
    result.history.push_back(stats);
    if (on_epoch) on_epoch(stats, params);
  }
  result.checkpoint.extra["train"] = tc;
  return result;
}

}  // namespace mmae::train
