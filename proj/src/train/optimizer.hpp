#pragma once

#include <cstdint>
#include <vector>

#include "tensor/tensor.hpp"

namespace mmae::train {

using tensor::Tensor;

struct AdamWOptions {
  double lr = 1e-3;
  double weight_decay = 0.05;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct OptimizerState {
  std::vector<Tensor<float>> m;
  std::vector<Tensor<float>> v;
  std::uint64_t step = 0;
};

// Zero moments shaped like params.
OptimizerState make_optimizer_state(const std::vector<Tensor<float>*>& params);

// Decoupled weight decay then a bias-corrected Adam update, in place.
void adamw_step(const std::vector<Tensor<float>*>& params, const std::vector<Tensor<float>>& grads,
                OptimizerState& state, const AdamWOptions& options);

// Linear ramp 0 → base_lr over warmup_steps, then cosine from base_lr to min_lr
// at total_steps.
double lr_schedule(std::uint64_t step, std::uint64_t total_steps, std::uint64_t warmup_steps, double base_lr,
                   double min_lr);

}  // namespace mmae::train
