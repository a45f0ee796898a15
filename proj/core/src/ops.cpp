#include "ow/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "ow/errors.hpp"

namespace ow {

namespace {

using detail::Node;

// C[m x n] += A[m x k] B[k x n]
template <typename T>
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c) {
  for (std::size_t i = 0; i < m; ++i) {
    T* crow = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = a[i * k + p];
      const T* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// C[m x k] += G[m x n] B^T, B is [k x n]
template <typename T>
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const T* g, const T* b, T* c) {
  for (std::size_t i = 0; i < m; ++i) {
    const T* grow = g + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const T* brow = b + p * n;
      T s = 0;
      for (std::size_t j = 0; j < n; ++j) s += grow[j] * brow[j];
      c[i * k + p] += s;
    }
  }
}

// C[k x n] += A^T G, A is [m x k], G is [m x n]
template <typename T>
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* g, T* c) {
  for (std::size_t i = 0; i < m; ++i) {
    const T* grow = g + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = a[i * k + p];
      T* crow = c + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * grow[j];
    }
  }
}

template <typename T>
bool wants_grad(const Node<T>& self, std::size_t i) {
  return self.parents[i]->requires_grad;
}

template <typename T>
void require_rank2(const Tensor<T>& x, const char* op) {
  if (x.rank() != 2) throw ShapeError(std::string(op) + ": expected rank-2 operand, got " + shape_string(x.shape()));
}

}  // namespace

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.shape()[1] != b.shape()[0]) {
    throw ShapeError("matmul: incompatible shapes " + shape_string(a.shape()) + " and " + shape_string(b.shape()));
  }
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  std::vector<T> out(m * n, T(0));
  gemm_nn(m, n, k, a.values().data(), b.values().data(), out.data());
  return make_op_result<T>({m, n}, std::move(out), {a, b}, [m, n, k](Node<T>& self) {
    const T* g = self.grad.data();
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    if (pa.requires_grad) gemm_nt(m, n, k, g, pb.value.data(), pa.grad_buffer());
    if (pb.requires_grad) gemm_tn(m, n, k, pa.value.data(), g, pb.grad_buffer());
  });
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("add: shape mismatch " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  }
  std::vector<T> out(a.numel());
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  return make_op_result<T>(a.shape(), std::move(out), {a, b}, [](Node<T>& self) {
    for (std::size_t p = 0; p < 2; ++p) {
      if (!wants_grad(self, p)) continue;
      T* dst = self.parents[p]->grad_buffer();
      for (std::size_t i = 0; i < self.grad.size(); ++i) dst[i] += self.grad[i];
    }
  });
}

template <typename T>
Tensor<T> add_bias(const Tensor<T>& x, const Tensor<T>& bias) {
  const std::size_t c = x.rank() == 0 ? 1 : x.shape().back();
  if (bias.numel() != c) {
    throw ShapeError("add_bias: bias " + shape_string(bias.shape()) + " does not match last axis of " +
                     shape_string(x.shape()));
  }
  const std::size_t r = x.numel() / c;
  std::vector<T> out(x.numel());
  auto xv = x.values();
  auto bv = bias.values();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] = xv[i * c + j] + bv[j];
  return make_op_result<T>(x.shape(), std::move(out), {x, bias}, [r, c](Node<T>& self) {
    const T* g = self.grad.data();
    if (wants_grad(self, 0)) {
      T* dx = self.parents[0]->grad_buffer();
      for (std::size_t i = 0; i < r * c; ++i) dx[i] += g[i];
    }
    if (wants_grad(self, 1)) {
      T* db = self.parents[1]->grad_buffer();
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) db[j] += g[i * c + j];
    }
  });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& x, T factor) {
  std::vector<T> out(x.values().begin(), x.values().end());
  for (auto& v : out) v *= factor;
  return make_op_result<T>(x.shape(), std::move(out), {x}, [factor](Node<T>& self) {
    T* dx = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < self.grad.size(); ++i) dx[i] += factor * self.grad[i];
  });
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  std::vector<T> out(x.values().begin(), x.values().end());
  for (auto& v : out) v = v > T(0) ? v : T(0);
  return make_op_result<T>(x.shape(), std::move(out), {x}, [](Node<T>& self) {
    auto& px = *self.parents[0];
    T* dx = px.grad_buffer();
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      if (px.value[i] > T(0)) dx[i] += self.grad[i];
    }
  });
}

template <typename T>
Tensor<T> gelu(const Tensor<T>& x) {
  const T c = T(kGeluTanhScale);
  const T a = T(kGeluCubic);
  std::vector<T> out(x.numel());
  auto xv = x.values();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const T v = xv[i];
    out[i] = T(0.5) * v * (T(1) + std::tanh(c * (v + a * v * v * v)));
  }
  return make_op_result<T>(x.shape(), std::move(out), {x}, [c, a](Node<T>& self) {
    auto& px = *self.parents[0];
    T* dx = px.grad_buffer();
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      const T v = px.value[i];
      const T t = std::tanh(c * (v + a * v * v * v));
      const T d = T(0.5) * (T(1) + t) + T(0.5) * v * (T(1) - t * t) * c * (T(1) + T(3) * a * v * v);
      dx[i] += d * self.grad[i];
    }
  });
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& x, std::size_t axis) {
  if (axis >= x.rank()) {
    throw ShapeError("softmax: axis " + std::to_string(axis) + " invalid for shape " + shape_string(x.shape()));
  }
  const auto& s = x.shape();
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
  for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
  const std::size_t len = s[axis];
  auto xv = x.values();
  std::vector<T> out(x.numel());
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t in = 0; in < inner; ++in) {
      const std::size_t base = o * len * inner + in;
      T mx = xv[base];
      for (std::size_t i = 1; i < len; ++i) mx = std::max(mx, xv[base + i * inner]);
      T z = 0;
      for (std::size_t i = 0; i < len; ++i) {
        const T e = std::exp(xv[base + i * inner] - mx);
        out[base + i * inner] = e;
        z += e;
      }
      for (std::size_t i = 0; i < len; ++i) out[base + i * inner] /= z;
    }
  }
  return make_op_result<T>(x.shape(), std::move(out), {x}, [outer, inner, len](Node<T>& self) {
    T* dx = self.parents[0]->grad_buffer();
    const auto& y = self.value;
    const auto& g = self.grad;
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t in = 0; in < inner; ++in) {
        const std::size_t base = o * len * inner + in;
        T dot = 0;
        for (std::size_t i = 0; i < len; ++i) dot += g[base + i * inner] * y[base + i * inner];
        for (std::size_t i = 0; i < len; ++i) {
          const std::size_t at = base + i * inner;
          dx[at] += y[at] * (g[at] - dot);
        }
      }
    }
  });
}

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gain, const Tensor<T>& bias, T eps) {
  const std::size_t c = x.rank() == 0 ? 1 : x.shape().back();
  if (gain.numel() != c || bias.numel() != c) {
    throw ShapeError("layer_norm: gain " + shape_string(gain.shape()) + " / bias " + shape_string(bias.shape()) +
                     " must match last axis of " + shape_string(x.shape()));
  }
  const std::size_t r = x.numel() / c;
  auto xv = x.values();
  auto gv = gain.values();
  auto bv = bias.values();
  std::vector<T> out(x.numel());
  std::vector<T> xhat(x.numel());
  std::vector<T> rstd(r);
  for (std::size_t i = 0; i < r; ++i) {
    const T* row = xv.data() + i * c;
    T mu = 0;
    for (std::size_t j = 0; j < c; ++j) mu += row[j];
    mu /= T(c);
    T var = 0;
    for (std::size_t j = 0; j < c; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= T(c);
    rstd[i] = T(1) / std::sqrt(var + eps);
    for (std::size_t j = 0; j < c; ++j) {
      const T h = (row[j] - mu) * rstd[i];
      xhat[i * c + j] = h;
      out[i * c + j] = h * gv[j] + bv[j];
    }
  }
  return make_op_result<T>(
      x.shape(), std::move(out), {x, gain, bias},
      [r, c, xhat = std::move(xhat), rstd = std::move(rstd)](Node<T>& self) {
        const T* g = self.grad.data();
        const auto& gain_v = self.parents[1]->value;
        if (wants_grad(self, 1)) {
          T* dg = self.parents[1]->grad_buffer();
          for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) dg[j] += g[i * c + j] * xhat[i * c + j];
        }
        if (wants_grad(self, 2)) {
          T* db = self.parents[2]->grad_buffer();
          for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) db[j] += g[i * c + j];
        }
        if (wants_grad(self, 0)) {
          T* dx = self.parents[0]->grad_buffer();
          for (std::size_t i = 0; i < r; ++i) {
            T mean_gh = 0, mean_ghx = 0;
            for (std::size_t j = 0; j < c; ++j) {
              const T gh = g[i * c + j] * gain_v[j];
              mean_gh += gh;
              mean_ghx += gh * xhat[i * c + j];
            }
            mean_gh /= T(c);
            mean_ghx /= T(c);
            for (std::size_t j = 0; j < c; ++j) {
              const T gh = g[i * c + j] * gain_v[j];
              dx[i * c + j] += rstd[i] * (gh - mean_gh - xhat[i * c + j] * mean_ghx);
            }
          }
        }
      });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
  double s = 0;
  for (T v : x.values()) s += v;
  return make_op_result<T>({}, {T(s)}, {x}, [](Node<T>& self) {
    auto& px = *self.parents[0];
    T* dx = px.grad_buffer();
    for (std::size_t i = 0; i < px.value.size(); ++i) dx[i] += self.grad[0];
  });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& x) {
  return scale(sum(x), T(1) / T(x.numel()));
}

template <typename T>
Tensor<T> l2_loss(const Tensor<T>& pred, const Tensor<T>& target) {
  if (pred.shape() != target.shape()) {
    throw ShapeError("l2_loss: prediction " + shape_string(pred.shape()) + " vs target " +
                     shape_string(target.shape()));
  }
  auto pv = pred.values();
  auto tv = target.values();
  double s = 0;
  for (std::size_t i = 0; i < pv.size(); ++i) {
    const double d = double(pv[i]) - double(tv[i]);
    s += d * d;
  }
  const std::size_t n = pv.size();
  return make_op_result<T>({}, {T(s / double(n))}, {pred, target}, [n](Node<T>& self) {
    auto& pp = *self.parents[0];
    auto& pt = *self.parents[1];
    const T k = T(2) * self.grad[0] / T(n);
    if (pp.requires_grad) {
      T* dp = pp.grad_buffer();
      for (std::size_t i = 0; i < n; ++i) dp[i] += k * (pp.value[i] - pt.value[i]);
    }
    if (pt.requires_grad) {
      T* dt = pt.grad_buffer();
      for (std::size_t i = 0; i < n; ++i) dt[i] -= k * (pp.value[i] - pt.value[i]);
    }
  });
}

template <typename T>
Tensor<T> cross_entropy(const Tensor<T>& logits, std::span<const int> labels) {
  require_rank2(logits, "cross_entropy");
  const std::size_t b = logits.shape()[0], k = logits.shape()[1];
  if (labels.size() != b) {
    throw ShapeError("cross_entropy: " + std::to_string(labels.size()) + " labels for logits " +
                     shape_string(logits.shape()));
  }
  for (int y : labels) {
    if (y < 0 || std::size_t(y) >= k) {
      throw std::out_of_range("cross_entropy: label " + std::to_string(y) + " outside [0, " + std::to_string(k) + ")");
    }
  }
  auto lv = logits.values();
  std::vector<T> probs(b * k);
  double total = 0;
  for (std::size_t i = 0; i < b; ++i) {
    const T* row = lv.data() + i * k;
    const T mx = *std::max_element(row, row + k);
    T z = 0;
    for (std::size_t j = 0; j < k; ++j) {
      probs[i * k + j] = std::exp(row[j] - mx);
      z += probs[i * k + j];
    }
    for (std::size_t j = 0; j < k; ++j) probs[i * k + j] /= z;
    total += double(mx) + std::log(double(z)) - double(row[labels[i]]);
  }
  std::vector<int> y(labels.begin(), labels.end());
  return make_op_result<T>({}, {T(total / double(b))}, {logits},
                           [b, k, probs = std::move(probs), y = std::move(y)](Node<T>& self) {
                             T* dl = self.parents[0]->grad_buffer();
                             const T s = self.grad[0] / T(b);
                             for (std::size_t i = 0; i < b; ++i) {
                               for (std::size_t j = 0; j < k; ++j) {
                                 const T onehot = std::size_t(y[i]) == j ? T(1) : T(0);
                                 dl[i * k + j] += s * (probs[i * k + j] - onehot);
                               }
                             }
                           });
}

template <typename T>
Tensor<T> gather_rows(const Tensor<T>& x, std::span<const std::size_t> idx) {
  if (x.rank() < 2) throw ShapeError("gather_rows: expected rank >= 2, got " + shape_string(x.shape()));
  if (idx.empty()) throw ShapeError("gather_rows: empty index list");
  const std::size_t rows = x.shape()[0], c = x.cols();
  auto xv = x.values();
  std::vector<T> out(idx.size() * c);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] >= rows) {
      throw ShapeError("gather_rows: row " + std::to_string(idx[i]) + " out of range for " + shape_string(x.shape()));
    }
    std::copy_n(xv.data() + idx[i] * c, c, out.data() + i * c);
  }
  Shape shape = x.shape();
  shape[0] = idx.size();
  std::vector<std::size_t> rows_taken(idx.begin(), idx.end());
  return make_op_result<T>(std::move(shape), std::move(out), {x}, [c, rows_taken = std::move(rows_taken)](Node<T>& self) {
    T* dx = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < rows_taken.size(); ++i) {
      T* dst = dx + rows_taken[i] * c;
      const T* src = self.grad.data() + i * c;
      for (std::size_t j = 0; j < c; ++j) dst[j] += src[j];
    }
  });
}

template <typename T>
Tensor<T> concat_rows(std::span<const Tensor<T>> parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no operands");
  Shape shape = parts[0].shape();
  if (shape.size() < 2) throw ShapeError("concat_rows: expected rank >= 2, got " + shape_string(shape));
  std::size_t total_rows = 0;
  for (const auto& p : parts) {
    if (p.rank() != shape.size() || !std::equal(shape.begin() + 1, shape.end(), p.shape().begin() + 1)) {
      throw ShapeError("concat_rows: " + shape_string(p.shape()) + " incompatible with " + shape_string(shape));
    }
    total_rows += p.shape()[0];
  }
  shape[0] = total_rows;
  std::vector<T> out;
  out.reserve(element_count(shape));
  for (const auto& p : parts) out.insert(out.end(), p.values().begin(), p.values().end());
  std::vector<Tensor<T>> parents(parts.begin(), parts.end());
  return make_op_result<T>(std::move(shape), std::move(out), std::move(parents), [](Node<T>& self) {
    std::size_t offset = 0;
    for (auto& p : self.parents) {
      const std::size_t n = p->value.size();
      if (p->requires_grad) {
        T* dst = p->grad_buffer();
        for (std::size_t i = 0; i < n; ++i) dst[i] += self.grad[offset + i];
      }
      offset += n;
    }
  });
}

template <typename T>
Tensor<T> segment_mean(const Tensor<T>& x, std::size_t segments) {
  require_rank2(x, "segment_mean");
  const std::size_t rows = x.shape()[0], c = x.shape()[1];
  if (segments == 0 || rows % segments != 0) {
    throw ShapeError("segment_mean: " + std::to_string(rows) + " rows do not split into " +
                     std::to_string(segments) + " segments");
  }
  const std::size_t n = rows / segments;
  auto xv = x.values();
  std::vector<T> out(segments * c, T(0));
  for (std::size_t s = 0; s < segments; ++s) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < c; ++j) out[s * c + j] += xv[(s * n + i) * c + j];
    for (std::size_t j = 0; j < c; ++j) out[s * c + j] /= T(n);
  }
  return make_op_result<T>({segments, c}, std::move(out), {x}, [segments, n, c](Node<T>& self) {
    T* dx = self.parents[0]->grad_buffer();
    for (std::size_t s = 0; s < segments; ++s)
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < c; ++j) dx[(s * n + i) * c + j] += self.grad[s * c + j] / T(n);
  });
}

template <typename T>
Tensor<T> attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v, std::size_t batch,
                    std::size_t heads, std::vector<T>* weights) {
  require_rank2(q, "attention");
  require_rank2(k, "attention");
  require_rank2(v, "attention");
  const std::size_t d = q.shape()[1];
  if (k.shape()[1] != d || v.shape() != k.shape()) {
    throw ShapeError("attention: q " + shape_string(q.shape()) + ", k " + shape_string(k.shape()) + ", v " +
                     shape_string(v.shape()) + " disagree");
  }
  if (batch == 0 || q.shape()[0] % batch != 0 || k.shape()[0] % batch != 0) {
    throw ShapeError("attention: row counts not divisible by batch " + std::to_string(batch));
  }
  if (heads == 0 || d % heads != 0) {
    throw ShapeError("attention: width " + std::to_string(d) + " not divisible by " + std::to_string(heads) + " heads");
  }
  const std::size_t nq = q.shape()[0] / batch, nk = k.shape()[0] / batch, dh = d / heads;
  const T sc = T(1) / std::sqrt(T(dh));
  auto qv = q.values();
  auto kv = k.values();
  auto vv = v.values();
  std::vector<T> probs(batch * heads * nq * nk);
  std::vector<T> out(batch * nq * d, T(0));
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t h = 0; h < heads; ++h) {
      for (std::size_t i = 0; i < nq; ++i) {
        const T* qi = qv.data() + (b * nq + i) * d + h * dh;
        T* p = probs.data() + ((b * heads + h) * nq + i) * nk;
        T mx = -std::numeric_limits<T>::infinity();
        for (std::size_t j = 0; j < nk; ++j) {
          const T* kj = kv.data() + (b * nk + j) * d + h * dh;
          T s = 0;
          for (std::size_t e = 0; e < dh; ++e) s += qi[e] * kj[e];
          p[j] = s * sc;
          mx = std::max(mx, p[j]);
        }
        T z = 0;
        for (std::size_t j = 0; j < nk; ++j) {
          p[j] = std::exp(p[j] - mx);
          z += p[j];
        }
        T* oi = out.data() + (b * nq + i) * d + h * dh;
        for (std::size_t j = 0; j < nk; ++j) {
          p[j] /= z;
          const T* vj = vv.data() + (b * nk + j) * d + h * dh;
          for (std::size_t e = 0; e < dh; ++e) oi[e] += p[j] * vj[e];
        }
      }
    }
  }
  if (weights) *weights = probs;
  return make_op_result<T>(
      {batch * nq, d}, std::move(out), {q, k, v},
      [batch, heads, nq, nk, d, dh, sc, probs = std::move(probs)](Node<T>& self) {
        auto& pq = *self.parents[0];
        auto& pk = *self.parents[1];
        auto& pv = *self.parents[2];
        T* dq = pq.requires_grad ? pq.grad_buffer() : nullptr;
        T* dk = pk.requires_grad ? pk.grad_buffer() : nullptr;
        T* dv = pv.requires_grad ? pv.grad_buffer() : nullptr;
        std::vector<T> ds(nk);
        for (std::size_t b = 0; b < batch; ++b) {
          for (std::size_t h = 0; h < heads; ++h) {
            for (std::size_t i = 0; i < nq; ++i) {
              const T* go = self.grad.data() + (b * nq + i) * d + h * dh;
              const T* p = probs.data() + ((b * heads + h) * nq + i) * nk;
              T weighted = 0;
              for (std::size_t j = 0; j < nk; ++j) {
                const T* vj = pv.value.data() + (b * nk + j) * d + h * dh;
                T dp = 0;
                for (std::size_t e = 0; e < dh; ++e) dp += go[e] * vj[e];
                ds[j] = dp;
                weighted += p[j] * dp;
                if (dv) {
                  T* dvj = dv + (b * nk + j) * d + h * dh;
                  for (std::size_t e = 0; e < dh; ++e) dvj[e] += p[j] * go[e];
                }
              }
              const T* qi = pq.value.data() + (b * nq + i) * d + h * dh;
              T* dqi = dq ? dq + (b * nq + i) * d + h * dh : nullptr;
              for (std::size_t j = 0; j < nk; ++j) {
                const T g = p[j] * (ds[j] - weighted) * sc;
                const T* kj = pk.value.data() + (b * nk + j) * d + h * dh;
                if (dqi)
                  for (std::size_t e = 0; e < dh; ++e) dqi[e] += g * kj[e];
                if (dk) {
                  T* dkj = dk + (b * nk + j) * d + h * dh;
                  for (std::size_t e = 0; e < dh; ++e) dkj[e] += g * qi[e];
                }
              }
            }
          }
        }
      });
}

#define OW_INSTANTIATE_OPS(T)                                                                              \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);                                           \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                              \
  template Tensor<T> add_bias(const Tensor<T>&, const Tensor<T>&);                                         \
  template Tensor<T> scale(const Tensor<T>&, T);                                                           \
  template Tensor<T> relu(const Tensor<T>&);                                                               \
  template Tensor<T> gelu(const Tensor<T>&);                                                               \
  template Tensor<T> softmax(const Tensor<T>&, std::size_t);                                               \
  template Tensor<T> layer_norm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, T);                  \
  template Tensor<T> sum(const Tensor<T>&);                                                                \
  template Tensor<T> mean(const Tensor<T>&);                                                               \
  template Tensor<T> l2_loss(const Tensor<T>&, const Tensor<T>&);                                          \
  template Tensor<T> cross_entropy(const Tensor<T>&, std::span<const int>);                                \
  template Tensor<T> gather_rows(const Tensor<T>&, std::span<const std::size_t>);                          \
  template Tensor<T> concat_rows(std::span<const Tensor<T>>);                                              \
  template Tensor<T> segment_mean(const Tensor<T>&, std::size_t);                                          \
  template Tensor<T> attention(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, std::size_t, std::size_t, \
                               std::vector<T>*);

OW_INSTANTIATE_OPS(float)
OW_INSTANTIATE_OPS(double)

#undef OW_INSTANTIATE_OPS

}  // namespace ow
