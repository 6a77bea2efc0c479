#pragma once

#include <functional>
#include <span>
#include <vector>

#include "tensor/tape.hpp"

namespace mmae::tensor {

// Builds a scalar from the given input nodes on a fresh tape.
template <typename T>
using ScalarFunction = std::function<Var<T>(Tape<T>&, std::span<const Var<T>>)>;

template <typename T>
struct GradCheckOptions {
  // Sixth-order central stencil; the larger step keeps rounding noise on
  // structurally zero gradients (e.g. attention key biases) near 1e-14.
  T step = T(1e-2);
  // Multiplies the analytic gradient before comparison; only used to confirm
  // that the checker itself flags a wrong gradient.
  T analytic_scale = T(1);
};

template <typename T>
struct GradCheckResult {
  T max_rel_err = 0;
  std::size_t worst_input = 0;
  std::size_t worst_index = 0;
  std::size_t coordinates = 0;
};

// Compares reverse-mode gradients of fn at `point` with central differences.
// Per coordinate the error is |analytic − numeric| / max(|analytic|, |numeric|, 1e-8);
// the result holds the maximum over all coordinates of all inputs.
template <typename T>
GradCheckResult<T> finite_difference_check(const ScalarFunction<T>& fn, std::vector<Tensor<T>> point,
                                           GradCheckOptions<T> options = {});

}  // namespace mmae::tensor
