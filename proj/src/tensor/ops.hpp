#pragma once

#include <cstddef>
#include <vector>

#include "tensor/tape.hpp"

namespace mmae::tensor {

enum class Reduction { Mean, Sum };

// Value-level kernels shared by the recorded ops and by tests.
namespace kernels {

// C = A·B (accumulate == false) or C += A·B.
template <typename T>
void gemm(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n, bool accumulate);
// C += A·Bᵀ with A[m×k], B[n×k].
template <typename T>
void gemm_nt(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n);
// C += Aᵀ·B with A[m×k], B[m×n]; C is k×n.
template <typename T>
void gemm_tn(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n);

template <typename T>
T gelu(T x);
template <typename T>
T gelu_derivative(T x);

}  // namespace kernels

template <typename T>
Var<T> matmul(Var<T> a, Var<T> b);

// x·W + b with the bias broadcast over rows.
template <typename T>
Var<T> linear(Var<T> x, Var<T> w, Var<T> b);

template <typename T>
Var<T> add(Var<T> a, Var<T> b);

template <typename T>
Var<T> scale(Var<T> x, T factor);

template <typename T>
Var<T> layer_norm(Var<T> x, Var<T> gamma, Var<T> beta, T eps);

template <typename T>
Var<T> softmax_rows(Var<T> x);

template <typename T>
Var<T> gelu(Var<T> x);

// Core of multi-head attention. qkv holds [Q | K | V] column blocks of width
// D each; returns the concatenated per-head outputs (n×D) before the output
// projection.
template <typename T>
Var<T> scaled_dot_product_attention(Var<T> qkv, std::size_t heads);

template <typename T>
struct AttentionWeights {
  Var<T> qkv_w;  // D × 3D
  Var<T> qkv_b;  // 3D
  Var<T> out_w;  // D × D
  Var<T> out_b;  // D
};

template <typename T>
Var<T> multi_head_self_attention(Var<T> z, const AttentionWeights<T>& w, std::size_t heads);

template <typename T>
Var<T> gather_rows(Var<T> x, std::vector<std::size_t> rows);

template <typename T>
Var<T> concat_rows(const std::vector<Var<T>>& parts);

template <typename T>
Var<T> sum(Var<T> x);

template <typename T>
Var<T> mean(Var<T> x);

// Σ (pred − target)², divided by the element count for Reduction::Mean.
template <typename T>
Var<T> squared_error(Var<T> pred, Tensor<T> target, Reduction reduction);

// Σ x ⊙ weights; a generic scalarisation used by gradient checks.
template <typename T>
Var<T> weighted_sum(Var<T> x, Tensor<T> weights);

}  // namespace mmae::tensor
