#include "tensor/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

namespace mmae::tensor {

namespace kernels {

template <typename T>
void gemm(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
  if (!accumulate) std::fill(c, c + m * n, T(0));
  for (std::size_t i = 0; i < m; ++i) {
    T* ci = c + i * n;
    const T* ai = a + i * k;
    for (std::size_t t = 0; t < k; ++t) {
      const T av = ai[t];
      if (av == T(0)) continue;
      const T* bt = b + t * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += av * bt[j];
    }
  }
}

// Transposes b once so the inner loop is the same vectorisable row update
// as gemm; a dot-product loop would not vectorise without fast-math.
template <typename T>
void gemm_nt(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n) {
  std::vector<T> bt(k * n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t t = 0; t < k; ++t) bt[t * n + j] = b[j * k + t];
  gemm(a, bt.data(), c, m, k, n, true);
}

template <typename T>
void gemm_tn(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const T* ai = a + i * k;
    const T* bi = b + i * n;
    for (std::size_t t = 0; t < k; ++t) {
      const T av = ai[t];
      if (av == T(0)) continue;
      T* ct = c + t * n;
      for (std::size_t j = 0; j < n; ++j) ct[j] += av * bi[j];
    }
  }
}

template <typename T>
T gelu(T x) {
  return T(0.5) * x * (T(1) + std::erf(x / std::numbers::sqrt2_v<T>));
}

template <typename T>
T gelu_derivative(T x) {
  const T cdf = T(0.5) * (T(1) + std::erf(x / std::numbers::sqrt2_v<T>));
  const T pdf = std::exp(T(-0.5) * x * x) / std::sqrt(T(2) * std::numbers::pi_v<T>);
  return cdf + x * pdf;
}

}  // namespace kernels

namespace {

template <typename T>
void require_matrix(const Tensor<T>& t, const char* what) {
  require(t.rank() <= 2, ErrorCode::Shape,
          std::string(what) + " must be a vector or matrix, got " + shape_string(t.shape()));
}

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* what) {
  require(a.shape() == b.shape(), ErrorCode::Shape,
          std::string(what) + ": shapes " + shape_string(a.shape()) + " and " + shape_string(b.shape()) +
              " differ");
}

}  // namespace

template <typename T>
Var<T> matmul(Var<T> a, Var<T> b) {
  const Tensor<T>& av = a.value();
  const Tensor<T>& bv = b.value();
  require_matrix(av, "matmul lhs");
  require_matrix(bv, "matmul rhs");
  const std::size_t m = av.rows(), k = av.cols(), n = bv.cols();
  require(bv.rows() == k, ErrorCode::Shape,
          "matmul inner dimensions differ: " + shape_string(av.shape()) + " x " + shape_string(bv.shape()));
  Tensor<T> out({m, n});
  kernels::gemm(av.data().data(), bv.data().data(), out.data().data(), m, k, n, false);
  return a.tape->record(std::move(out), {a, b}, [a, b, m, k, n](Tape<T>& tape, const Tensor<T>& g) {
    if (tape.requires_grad(a)) {
      kernels::gemm_nt(g.data().data(), b.value().data().data(), tape.grad_slot(a).data().data(), m, n, k);
    }
    if (tape.requires_grad(b)) {
      kernels::gemm_tn(a.value().data().data(), g.data().data(), tape.grad_slot(b).data().data(), m, k, n);
    }
  });
}

template <typename T>
Var<T> linear(Var<T> x, Var<T> w, Var<T> b) {
  const Tensor<T>& xv = x.value();
  const Tensor<T>& wv = w.value();
  const Tensor<T>& bv = b.value();
  require_matrix(xv, "linear input");
  require_matrix(wv, "linear weight");
  const std::size_t m = xv.rows(), k = xv.cols(), n = wv.cols();
  require(wv.rows() == k, ErrorCode::Shape,
          "linear: input " + shape_string(xv.shape()) + " incompatible with weight " + shape_string(wv.shape()));
  require(bv.size() == n, ErrorCode::Shape, "linear: bias length must equal output width");
  Tensor<T> out({m, n});
  for (std::size_t i = 0; i < m; ++i) std::copy(bv.data().begin(), bv.data().end(), out.row(i));
  kernels::gemm(xv.data().data(), wv.data().data(), out.data().data(), m, k, n, true);
  return x.tape->record(std::move(out), {x, w, b}, [x, w, b, m, k, n](Tape<T>& tape, const Tensor<T>& g) {
    if (tape.requires_grad(x)) {
      kernels::gemm_nt(g.data().data(), w.value().data().data(), tape.grad_slot(x).data().data(), m, n, k);
    }
    if (tape.requires_grad(w)) {
      kernels::gemm_tn(x.value().data().data(), g.data().data(), tape.grad_slot(w).data().data(), m, k, n);
    }
    if (tape.requires_grad(b)) {
      auto gb = tape.grad_slot(b).data();
      for (std::size_t i = 0; i < m; ++i) {
        const T* gi = g.row(i);
        for (std::size_t j = 0; j < n; ++j) gb[j] += gi[j];
      }
    }
  });
}

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
  const Tensor<T>& av = a.value();
  const Tensor<T>& bv = b.value();
  require_same_shape(av, bv, "add");
  Tensor<T> out = av;
  auto o = out.data();
  auto bd = bv.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += bd[i];
  return a.tape->record(std::move(out), {a, b}, [a, b](Tape<T>& tape, const Tensor<T>& g) {
    tape.accumulate(a, g);
    tape.accumulate(b, g);
  });
}

template <typename T>
Var<T> scale(Var<T> x, T factor) {
  Tensor<T> out = x.value();
  for (auto& v : out.data()) v *= factor;
  return x.tape->record(std::move(out), {x}, [x, factor](Tape<T>& tape, const Tensor<T>& g) {
    auto gx = tape.grad_slot(x).data();
    auto gd = g.data();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += factor * gd[i];
  });
}

template <typename T>
Var<T> layer_norm(Var<T> x, Var<T> gamma, Var<T> beta, T eps) {
  require(eps > T(0), ErrorCode::Config, "layer_norm eps must be positive");
  const Tensor<T>& xv = x.value();
  require_matrix(xv, "layer_norm input");
  const std::size_t n = xv.rows(), d = xv.cols();
  require(gamma.value().size() == d && beta.value().size() == d, ErrorCode::Shape,
          "layer_norm affine parameters must match the row width");
  Tensor<T> normalized({n, d});
  std::vector<T> inv_std(n);
  for (std::size_t i = 0; i < n; ++i) {
    const T* xi = xv.row(i);
    T mu = 0;
    for (std::size_t j = 0; j < d; ++j) mu += xi[j];
    mu /= T(d);
    T var = 0;
    for (std::size_t j = 0; j < d; ++j) var += (xi[j] - mu) * (xi[j] - mu);
    var /= T(d);
    inv_std[i] = T(1) / std::sqrt(var + eps);
    T* hi = normalized.row(i);
    for (std::size_t j = 0; j < d; ++j) hi[j] = (xi[j] - mu) * inv_std[i];
  }
  Tensor<T> out({n, d});
  const auto gv = gamma.value().data();
  const auto bv = beta.value().data();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) out(i, j) = normalized(i, j) * gv[j] + bv[j];
  }
  return x.tape->record(
      std::move(out), {x, gamma, beta},
      [x, gamma, beta, n, d, xhat = std::move(normalized), inv_std = std::move(inv_std)](Tape<T>& tape,
                                                                                        const Tensor<T>& g) {
        const auto gv = gamma.value().data();
        if (tape.requires_grad(gamma)) {
          auto gg = tape.grad_slot(gamma).data();
          for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < d; ++j) gg[j] += g(i, j) * xhat(i, j);
        }
        if (tape.requires_grad(beta)) {
          auto gb = tape.grad_slot(beta).data();
          for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < d; ++j) gb[j] += g(i, j);
        }
        if (tape.requires_grad(x)) {
          Tensor<T>& gx = tape.grad_slot(x);
          std::vector<T> dxhat(d);
          for (std::size_t i = 0; i < n; ++i) {
            T mean_d = 0, mean_dx = 0;
            for (std::size_t j = 0; j < d; ++j) {
              dxhat[j] = g(i, j) * gv[j];
              mean_d += dxhat[j];
              mean_dx += dxhat[j] * xhat(i, j);
            }
            mean_d /= T(d);
            mean_dx /= T(d);
            for (std::size_t j = 0; j < d; ++j) {
              gx(i, j) += inv_std[i] * (dxhat[j] - mean_d - xhat(i, j) * mean_dx);
            }
          }
        }
      });
}

template <typename T>
Var<T> softmax_rows(Var<T> x) {
  const Tensor<T>& xv = x.value();
  require_matrix(xv, "softmax input");
  const std::size_t n = xv.rows(), d = xv.cols();
  Tensor<T> out({n, d});
  for (std::size_t i = 0; i < n; ++i) {
    const T* xi = xv.row(i);
    T* yi = out.row(i);
    const T mx = *std::max_element(xi, xi + d);
    T total = 0;
    for (std::size_t j = 0; j < d; ++j) total += (yi[j] = std::exp(xi[j] - mx));
    for (std::size_t j = 0; j < d; ++j) yi[j] /= total;
  }
  Tensor<T> saved = out;
  return x.tape->record(std::move(out), {x}, [x, n, d, yv = std::move(saved)](Tape<T>& tape, const Tensor<T>& g) {
    Tensor<T>& gx = tape.grad_slot(x);
    for (std::size_t i = 0; i < n; ++i) {
      T dot = 0;
      for (std::size_t j = 0; j < d; ++j) dot += g(i, j) * yv(i, j);
      for (std::size_t j = 0; j < d; ++j) gx(i, j) += yv(i, j) * (g(i, j) - dot);
    }
  });
}

template <typename T>
Var<T> gelu(Var<T> x) {
  Tensor<T> out = x.value();
  for (auto& v : out.data()) v = kernels::gelu(v);
  return x.tape->record(std::move(out), {x}, [x](Tape<T>& tape, const Tensor<T>& g) {
    const auto xv = x.value().data();
    auto gx = tape.grad_slot(x).data();
    auto gd = g.data();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += gd[i] * kernels::gelu_derivative(xv[i]);
  });
}

template <typename T>
Var<T> scaled_dot_product_attention(Var<T> qkv, std::size_t heads) {
  const Tensor<T>& in = qkv.value();
  require_matrix(in, "attention input");
  require(in.cols() % 3 == 0, ErrorCode::Shape, "attention input width must be 3·D");
  const std::size_t n = in.rows(), width = in.cols() / 3;
  require(heads >= 1 && width % heads == 0, ErrorCode::Config,
          "latent width " + std::to_string(width) + " is not divisible by " + std::to_string(heads) + " heads");
  const std::size_t hd = width / heads;
  const T scale_factor = T(1) / std::sqrt(T(hd));
  const std::size_t stride = 3 * width;

  Tensor<T> out({n, width});
  std::vector<T> probs(heads * n * n);
  for (std::size_t h = 0; h < heads; ++h) {
    const std::size_t qo = h * hd, ko = width + h * hd, vo = 2 * width + h * hd;
    T* p = probs.data() + h * n * n;
    for (std::size_t i = 0; i < n; ++i) {
      const T* qi = in.row(i) + qo;
      T* pi = p + i * n;
      T mx = -std::numeric_limits<T>::infinity();
      for (std::size_t j = 0; j < n; ++j) {
        const T* kj = in.row(j) + ko;
        T s = 0;
        for (std::size_t c = 0; c < hd; ++c) s += qi[c] * kj[c];
        pi[j] = s * scale_factor;
        mx = std::max(mx, pi[j]);
      }
      T total = 0;
      for (std::size_t j = 0; j < n; ++j) total += (pi[j] = std::exp(pi[j] - mx));
      for (std::size_t j = 0; j < n; ++j) pi[j] /= total;
      T* oi = out.row(i) + qo;
      for (std::size_t j = 0; j < n; ++j) {
        const T* vj = in.data().data() + j * stride + vo;
        const T pij = pi[j];
        for (std::size_t c = 0; c < hd; ++c) oi[c] += pij * vj[c];
      }
    }
  }
  return qkv.tape->record(
      std::move(out), {qkv},
      [qkv, heads, n, width, hd, scale_factor, stride, probs = std::move(probs)](Tape<T>& tape,
                                                                                  const Tensor<T>& g) {
        const Tensor<T>& in = qkv.value();
        Tensor<T>& gin = tape.grad_slot(qkv);
        std::vector<T> dp(n), ds(n);
        for (std::size_t h = 0; h < heads; ++h) {
          const std::size_t qo = h * hd, ko = width + h * hd, vo = 2 * width + h * hd;
          const T* p = probs.data() + h * n * n;
          for (std::size_t i = 0; i < n; ++i) {
            const T* gi = g.row(i) + qo;
            const T* pi = p + i * n;
            T dot = 0;
            for (std::size_t j = 0; j < n; ++j) {
              const T* vj = in.row(j) + vo;
              T s = 0;
              for (std::size_t c = 0; c < hd; ++c) s += gi[c] * vj[c];
              dp[j] = s;
              dot += s * pi[j];
              // dV_j += P_ij · dO_i
              T* gvj = gin.row(j) + vo;
              for (std::size_t c = 0; c < hd; ++c) gvj[c] += pi[j] * gi[c];
            }
            for (std::size_t j = 0; j < n; ++j) ds[j] = pi[j] * (dp[j] - dot) * scale_factor;
            const T* qi = in.row(i) + qo;
            T* gqi = gin.row(i) + qo;
            for (std::size_t j = 0; j < n; ++j) {
              const T dsj = ds[j];
              const T* kj = in.data().data() + j * stride + ko;
              T* gkj = gin.data().data() + j * stride + ko;
              for (std::size_t c = 0; c < hd; ++c) {
                gqi[c] += dsj * kj[c];
                gkj[c] += dsj * qi[c];
              }
            }
          }
        }
      });
}

template <typename T>
Var<T> multi_head_self_attention(Var<T> z, const AttentionWeights<T>& w, std::size_t heads) {
  const std::size_t width = z.value().cols();
  require(heads >= 1 && width % heads == 0, ErrorCode::Config,
          "latent width " + std::to_string(width) + " is not divisible by " + std::to_string(heads) + " heads");
  Var<T> qkv = linear(z, w.qkv_w, w.qkv_b);
  Var<T> heads_out = scaled_dot_product_attention(qkv, heads);
  return linear(heads_out, w.out_w, w.out_b);
}

template <typename T>
Var<T> gather_rows(Var<T> x, std::vector<std::size_t> rows) {
  const Tensor<T>& xv = x.value();
  require_matrix(xv, "gather input");
  require(!rows.empty(), ErrorCode::Shape, "gather_rows needs at least one row");
  const std::size_t d = xv.cols();
  Tensor<T> out({rows.size(), d});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    require(rows[i] < xv.rows(), ErrorCode::Shape, "gather_rows index out of range");
    std::copy(xv.row(rows[i]), xv.row(rows[i]) + d, out.row(i));
  }
  return x.tape->record(std::move(out), {x}, [x, d, rows = std::move(rows)](Tape<T>& tape, const Tensor<T>& g) {
    Tensor<T>& gx = tape.grad_slot(x);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      T* dst = gx.row(rows[i]);
      const T* src = g.row(i);
      for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
    }
  });
}

template <typename T>
Var<T> concat_rows(const std::vector<Var<T>>& parts) {
  require(!parts.empty(), ErrorCode::Shape, "concat_rows needs at least one operand");
  const std::size_t d = parts.front().value().cols();
  std::size_t total = 0;
  for (const auto& p : parts) {
    require_matrix(p.value(), "concat operand");
    require(p.value().cols() == d, ErrorCode::Shape, "concat_rows operands differ in width");
    total += p.value().rows();
  }
  Tensor<T> out({total, d});
  std::size_t r = 0;
  for (const auto& p : parts) {
    std::copy(p.value().data().begin(), p.value().data().end(), out.row(r));
    r += p.value().rows();
  }
  return parts.front().tape->record(std::move(out), parts, [parts](Tape<T>& tape, const Tensor<T>& g) {
    std::size_t r = 0;
    for (const auto& p : parts) {
      const std::size_t rows = p.value().rows();
      if (tape.requires_grad(p)) {
        auto dst = tape.grad_slot(p).data();
        const T* src = g.row(r);
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
      }
      r += rows;
    }
  });
}

template <typename T>
Var<T> sum(Var<T> x) {
  T total = 0;
  for (T v : x.value().data()) total += v;
  return x.tape->record(Tensor<T>({1}, {total}), {x}, [x](Tape<T>& tape, const Tensor<T>& g) {
    for (auto& v : tape.grad_slot(x).data()) v += g[0];
  });
}

template <typename T>
Var<T> mean(Var<T> x) {
  return scale(sum(x), T(1) / T(x.value().size()));
}

template <typename T>
Var<T> squared_error(Var<T> pred, Tensor<T> target, Reduction reduction) {
  require_same_shape(pred.value(), target, "squared_error");
  const auto p = pred.value().data();
  const auto t = target.data();
  T total = 0;
  for (std::size_t i = 0; i < p.size(); ++i) total += (p[i] - t[i]) * (p[i] - t[i]);
  const T norm = reduction == Reduction::Mean ? T(1) / T(p.size()) : T(1);
  return pred.tape->record(Tensor<T>({1}, {total * norm}), {pred},
                           [pred, norm, target = std::move(target)](Tape<T>& tape, const Tensor<T>& g) {
                             const auto p = pred.value().data();
                             const auto t = target.data();
                             auto gp = tape.grad_slot(pred).data();
                             const T k = T(2) * norm * g[0];
                             for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += k * (p[i] - t[i]);
                           });
}

template <typename T>
Var<T> weighted_sum(Var<T> x, Tensor<T> weights) {
  require_same_shape(x.value(), weights, "weighted_sum");
  T total = 0;
  const auto xv = x.value().data();
  for (std::size_t i = 0; i < xv.size(); ++i) total += xv[i] * weights[i];
  return x.tape->record(Tensor<T>({1}, {total}), {x}, [x, weights = std::move(weights)](Tape<T>& tape, const Tensor<T>& g) {
    auto gx = tape.grad_slot(x).data();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[0] * weights[i];
  });
}

#define MMAE_INSTANTIATE_OPS(T)                                                                   \
  template void kernels::gemm<T>(const T*, const T*, T*, std::size_t, std::size_t, std::size_t, bool); \
  template void kernels::gemm_nt<T>(const T*, const T*, T*, std::size_t, std::size_t, std::size_t);  \
  template void kernels::gemm_tn<T>(const T*, const T*, T*, std::size_t, std::size_t, std::size_t);  \
  template T kernels::gelu<T>(T);                                                                 \
  template T kernels::gelu_derivative<T>(T);                                                      \
  template Var<T> matmul<T>(Var<T>, Var<T>);                                                      \
  template Var<T> linear<T>(Var<T>, Var<T>, Var<T>);                                              \
  template Var<T> add<T>(Var<T>, Var<T>);                                                         \
  template Var<T> scale<T>(Var<T>, T);                                                            \
  template Var<T> layer_norm<T>(Var<T>, Var<T>, Var<T>, T);                                       \
  template Var<T> softmax_rows<T>(Var<T>);                                                        \
  template Var<T> gelu<T>(Var<T>);                                                                \
  template Var<T> scaled_dot_product_attention<T>(Var<T>, std::size_t);                           \
  template Var<T> multi_head_self_attention<T>(Var<T>, const AttentionWeights<T>&, std::size_t);  \
  template Var<T> gather_rows<T>(Var<T>, std::vector<std::size_t>);                               \
  template Var<T> concat_rows<T>(const std::vector<Var<T>>&);                                     \
  template Var<T> sum<T>(Var<T>);                                                                 \
  template Var<T> mean<T>(Var<T>);                                                                \
  template Var<T> squared_error<T>(Var<T>, Tensor<T>, Reduction);                                 \
  template Var<T> weighted_sum<T>(Var<T>, Tensor<T>);

MMAE_INSTANTIATE_OPS(float)
MMAE_INSTANTIATE_OPS(double)

}  // namespace mmae::tensor
