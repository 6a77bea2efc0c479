#include "train/optimizer.hpp"

#include <cmath>
#include <numbers>

namespace mmae::train {

OptimizerState make_optimizer_state(const std::vector<Tensor<float>*>& params) {
  OptimizerState s;
  for (const auto* p : params) {
    s.m.emplace_back(p->shape());
    s.v.emplace_back(p->shape());
  }
  return s;
}

void adamw_step(const std::vector<Tensor<float>*>& params, const std::vector<Tensor<float>>& grads,
                OptimizerState& state, const AdamWOptions& o) {
  require(grads.size() == params.size() && state.m.size() == params.size() && state.v.size() == params.size(),
          ErrorCode::Contract, "optimizer: parameter, gradient and moment counts differ");
  for (std::size_t i = 0; i < params.size(); ++i) {
    require(grads[i].shape() == params[i]->shape() && state.m[i].shape() == params[i]->shape(), ErrorCode::Contract,
            "optimizer: gradient shape " + tensor::shape_string(grads[i].shape()) + " differs from parameter " +
                tensor::shape_string(params[i]->shape()));
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(o.beta1, double(state.step));
  const double c2 = 1.0 - std::pow(o.beta2, double(state.step));
  const double decay = 1.0 - o.lr * o.weight_decay;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i]->data();
    auto g = grads[i].data();
    auto m = state.m[i].data();
    auto v = state.v[i].data();
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double gj = g[j];
      const double mj = o.beta1 * m[j] + (1.0 - o.beta1) * gj;
      const double vj = o.beta2 * v[j] + (1.0 - o.beta2) * gj * gj;
      m[j] = float(mj);
      v[j] = float(vj);
      const double update = (mj / c1) / (std::sqrt(vj / c2) + o.eps);
      p[j] = float(double(p[j]) * decay - o.lr * update);
    }
  }
}

double lr_schedule(std::uint64_t step, std::uint64_t total_steps, std::uint64_t warmup_steps, double base_lr,
                   double min_lr) {
  if (warmup_steps > 0 && step < warmup_steps) return base_lr * double(step) / double(warmup_steps);
  if (total_steps <= warmup_steps) return base_lr;
  const double progress = std::min(1.0, double(step - warmup_steps) / double(total_steps - warmup_steps));
  return min_lr + 0.5 * (base_lr - min_lr) * (1.0 + std::cos(std::numbers::pi * progress));
}

}  // namespace mmae::train
