#include "app/gradcheck_suite.hpp"

#include <chrono>
#include <random>

#include "common/parallel.hpp"
#include "model/mmae.hpp"
#include "tensor/gradcheck.hpp"

namespace mmae::app {

using nlohmann::json;
using tensor::Tape;
using tensor::Tensor;
using tensor::Var;
using Fn = tensor::ScalarFunction<double>;

namespace {

constexpr double kOpTolerance = 1e-4;
constexpr double kModelTolerance = 1e-3;

Tensor<double> random_tensor(tensor::Shape shape, std::mt19937_64& rng, double lo = -1, double hi = 1) {
  Tensor<double> t(std::move(shape));
  std::uniform_real_distribution<double> u(lo, hi);
  for (auto& v : t.data()) v = u(rng);
  return t;
}

// Scalarises a matrix-valued op with fixed random weights so that every
// output coordinate influences the checked gradient.
Fn scalarised(std::function<Var<double>(std::span<const Var<double>>)> op, tensor::Shape out_shape,
              std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Tensor<double> w = random_tensor(std::move(out_shape), rng);
  return [op, w](Tape<double>&, std::span<const Var<double>> in) { return tensor::weighted_sum(op(in), w); };
}

struct OpCase {
  std::string name;
  std::vector<tensor::Shape> inputs;
  std::function<Fn(std::uint64_t)> make;
};

std::vector<OpCase> op_cases() {
  using S = std::span<const Var<double>>;
  std::vector<OpCase> cases;
  cases.push_back({"matmul", {{3, 4}, {4, 2}}, [](std::uint64_t s) {
                     return scalarised([](S in) { return tensor::matmul(in[0], in[1]); }, {3, 2}, s);
                   }});
  cases.push_back({"linear", {{3, 4}, {4, 5}, {5}}, [](std::uint64_t s) {
                     return scalarised([](S in) { return tensor::linear(in[0], in[1], in[2]); }, {3, 5}, s);
                   }});
  cases.push_back({"add", {{2, 3}, {2, 3}}, [](std::uint64_t s) {
                     return scalarised([](S in) { return tensor::add(in[0], in[1]); }, {2, 3}, s);
                   }});
  cases.push_back({"scale", {{2, 3}}, [](std::uint64_t s) {
                     return scalarised([](S in) { return tensor::scale(in[0], -1.7); }, {2, 3}, s);
                   }});
  cases.push_back({"layer_norm", {{3, 5}, {5}, {5}}, [](std::uint64_t s) {
                     return scalarised([](S in) { return tensor::layer_norm(in[0], in[1], in[2], 1e-6); }, {3, 5}, s);
                   }});
  cases.push_back({"softmax_rows", {{3, 4}}, [](std::uint64_t s) {
                     return scalarised([](S in) { return tensor::softmax_rows(in[0]); }, {3, 4}, s);
                   }});
  cases.push_back({"gelu", {{3, 4}}, [](std::uint64_t s) {
                     return scalarised([](S in) { return tensor::gelu(in[0]); }, {3, 4}, s);
                   }});
  cases.push_back({"scaled_dot_product_attention", {{4, 18}}, [](std::uint64_t s) {
                     return scalarised([](S in) { return tensor::scaled_dot_product_attention(in[0], 2); }, {4, 6}, s);
                   }});
  cases.push_back({"multi_head_self_attention", {{4, 8}, {8, 24}, {24}, {8, 8}, {8}}, [](std::uint64_t s) {
                     return scalarised(
                         [](S in) {
                           tensor::AttentionWeights<double> w{in[1], in[2], in[3], in[4]};
                           return tensor::multi_head_self_attention(in[0], w, 2);
                         },
                         {4, 8}, s);
                   }});
  cases.push_back({"gather_rows", {{4, 3}}, [](std::uint64_t s) {
                     return scalarised([](S in) { return tensor::gather_rows(in[0], {2, 0, 2, 3}); }, {4, 3}, s);
                   }});
  cases.push_back({"concat_rows", {{2, 3}, {1, 3}}, [](std::uint64_t s) {
                     return scalarised([](S in) { return tensor::concat_rows<double>({in[0], in[1]}); }, {3, 3}, s);
                   }});
  cases.push_back({"sum", {{3, 4}}, [](std::uint64_t) {
                     return Fn([](Tape<double>&, S in) { return tensor::sum(in[0]); });
                   }});
  cases.push_back({"mean", {{3, 4}}, [](std::uint64_t) {
                     return Fn([](Tape<double>&, S in) { return tensor::mean(in[0]); });
                   }});
  for (auto reduction : {tensor::Reduction::Mean, tensor::Reduction::Sum}) {
    const std::string name = reduction == tensor::Reduction::Mean ? "squared_error_mean" : "squared_error_sum";
    cases.push_back({name, {{3, 4}}, [reduction](std::uint64_t s) {
                       std::mt19937_64 rng(s);
                       Tensor<double> target = random_tensor({3, 4}, rng);
                       return Fn([target, reduction](Tape<double>&, S in) {
                         return tensor::squared_error(in[0], target, reduction);
                       });
                     }});
  }
  cases.push_back({"weighted_sum", {{3, 4}}, [](std::uint64_t s) {
                     std::mt19937_64 rng(s);
                     Tensor<double> w = random_tensor({3, 4}, rng);
                     return Fn([w](Tape<double>&, S in) { return tensor::weighted_sum(in[0], w); });
                   }});
  return cases;
}

GradcheckEntry check_op(const OpCase& c, std::uint64_t seed, std::size_t points) {
  GradcheckEntry e{c.name, 0, kOpTolerance, points, 0, false};
  for (std::size_t p = 0; p < points; ++p) {
    std::mt19937_64 rng(derive_seed(seed, fnv1a(c.name.data(), c.name.size()), p));
    std::vector<Tensor<double>> point;
    for (const auto& shape : c.inputs) point.push_back(random_tensor(shape, rng));
    const auto r = tensor::finite_difference_check<double>(c.make(rng()), point);
    e.max_rel_err = std::max(e.max_rel_err, r.max_rel_err);
    e.coordinates += r.coordinates;
  }
  e.passed = e.max_rel_err <= e.tolerance;
  return e;
}

GradcheckEntry check_model(const std::string& name, const model::ModelConfig& cfg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  // Wider init than training uses so that no gradient sits near the 1e-8
  // floor of the relative error.
  model::ModelConfig init_cfg = cfg;
  init_cfg.init_std = 0.4;
  auto params = model::init_params(init_cfg, rng()).cast<double>();
  std::vector<Tensor<double>> point;
  for (const auto& [pname, t] : params.named()) {
    Tensor<double> v = *t;
    if (pname.find("bias") != std::string::npos || pname.find("beta") != std::string::npos) {
      v = random_tensor(v.shape(), rng, -0.3, 0.3);
    } else if (pname.find("gamma") != std::string::npos) {
      v = random_tensor(v.shape(), rng, 0.6, 1.4);
    }
    point.push_back(std::move(v));
  }
  Tensor<double> patches = random_tensor({cfg.segments, cfg.patch_size()}, rng, -2, 2);
  model::Rng plan_rng(rng());
  const auto plan = model::sample_plan_for(cfg, cfg.region_offsets.front(), plan_rng);

  const Fn fn = [cfg, patches, plan](Tape<double>&, std::span<const Var<double>> in) {
    const auto bound = model::bind_leaves<double>(cfg, in);
    return model::forward(bound, cfg, patches, plan).loss.total;
  };
  const auto r = tensor::finite_difference_check<double>(fn, point);
  GradcheckEntry e{name, r.max_rel_err, kModelTolerance, 1, r.coordinates, false};
  e.passed = e.max_rel_err <= e.tolerance;
  return e;
}

}  // namespace

bool GradcheckSuiteResult::passed() const {
  return std::all_of(entries.begin(), entries.end(), [](const GradcheckEntry& e) { return e.passed; });
}

json to_json(const GradcheckSuiteResult& r) {
  json entries = json::array();
  for (const auto& e : r.entries) {
    entries.push_back({{"name", e.name},
                       {"max_rel_err", e.max_rel_err},
                       {"tolerance", e.tolerance},
                       {"points", e.points},
                       {"coordinates", e.coordinates},
                       {"passed", e.passed}});
  }
  return json{{"passed", r.passed()}, {"seconds", r.seconds}, {"checks", entries}};
}

model::ModelConfig tiny_gradcheck_config() {
  model::ModelConfig c;
  c.leads = 2;
  c.segment_length = 3;
  c.segments = 6;
  c.region_length = 2;
  c.region_offsets = {1, 3};
  c.embed_dim = 8;
  c.decoder_dim = 8;
  c.depth = 1;
  c.encoder_heads = 2;
  c.decoder_heads = 2;
  c.mask_ratio = 0.34;
  return c;
}

GradcheckSuiteResult run_gradcheck_suite(std::uint64_t seed, std::size_t points) {
  const auto start = std::chrono::steady_clock::now();
  const auto cases = op_cases();
  const model::ModelConfig tiny = tiny_gradcheck_config();
  model::ModelConfig tiny_norms = tiny;
  tiny_norms.final_encoder_norm = true;
  tiny_norms.decoder_output_norm = true;
  tiny_norms.loss_reduction = tensor::Reduction::Sum;

  GradcheckSuiteResult result;
  result.entries.resize(cases.size() + 2);
  parallel_for(result.entries.size(), [&](std::size_t i) {
    if (i < cases.size()) {
      result.entries[i] = check_op(cases[i], seed, points);
    } else if (i == cases.size()) {
      result.entries[i] = check_model("end_to_end", tiny, derive_seed(seed, 0xe2e));
    } else {
      result.entries[i] = check_model("end_to_end_norms_sum", tiny_norms, derive_seed(seed, 0xe2f));
    }
  });
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace mmae::app
