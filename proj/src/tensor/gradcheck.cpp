#include "tensor/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace mmae::tensor {

namespace {

template <typename T>
T evaluate(const ScalarFunction<T>& fn, const std::vector<Tensor<T>>& point) {
  Tape<T> tape;
  std::vector<Var<T>> inputs;
  inputs.reserve(point.size());
  for (const auto& p : point) inputs.push_back(tape.parameter(p, false));
  const Var<T> out = fn(tape, inputs);
  require(out.value().size() == 1, ErrorCode::Contract, "gradient check needs a scalar function");
  return out.value()[0];
}

}  // namespace

template <typename T>
GradCheckResult<T> finite_difference_check(const ScalarFunction<T>& fn, std::vector<Tensor<T>> point,
                                           GradCheckOptions<T> options) {
  require(options.step > T(0), ErrorCode::Config, "finite-difference step must be positive");

  std::vector<Tensor<T>> analytic;
  {
    Tape<T> tape;
    std::vector<Var<T>> inputs;
    for (const auto& p : point) inputs.push_back(tape.parameter(p, true));
    const Var<T> out = fn(tape, inputs);
    GradMap<T> grads = tape.backward(out);
    for (const auto& v : inputs) analytic.push_back(grads.at(v));
  }

  GradCheckResult<T> result;
  for (std::size_t input = 0; input < point.size(); ++input) {
    auto coords = point[input].data();
    for (std::size_t i = 0; i < coords.size(); ++i) {
      const T saved = coords[i];
      const auto at = [&](T offset) {
        coords[i] = saved + offset;
        return evaluate(fn, point);
      };
      const T h = options.step;
      const T d1 = at(h) - at(-h), d2 = at(T(2) * h) - at(T(-2) * h), d3 = at(T(3) * h) - at(T(-3) * h);
      const T numeric = (T(45) * d1 - T(9) * d2 + d3) / (T(60) * h);
      coords[i] = saved;

      const T a = analytic[input][i] * options.analytic_scale;
      const T denom = std::max({std::abs(a), std::abs(numeric), T(1e-8)});
      const T err = std::abs(a - numeric) / denom;
      ++result.coordinates;
      if (err > result.max_rel_err) {
        result.max_rel_err = err;
        result.worst_input = input;
        result.worst_index = i;
      }
    }
  }
  return result;
}

template GradCheckResult<float> finite_difference_check<float>(const ScalarFunction<float>&,
                                                               std::vector<Tensor<float>>,
                                                               GradCheckOptions<float>);
template GradCheckResult<double> finite_difference_check<double>(const ScalarFunction<double>&,
                                                                 std::vector<Tensor<double>>,
                                                                 GradCheckOptions<double>);

}  // namespace mmae::tensor
