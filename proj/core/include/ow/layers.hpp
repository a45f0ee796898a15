#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ow/registry.hpp"
#include "ow/tensor.hpp"

namespace ow {

template <typename T>
class Linear {
 public:
  Linear() = default;
  Linear(std::size_t in, std::size_t out, Rng& rng);

  Tensor<T> forward(const Tensor<T>& x) const;
  void collect(const std::string& prefix, std::vector<NamedTensor<T>>& out) const;

  std::size_t in_features() const { return weight.shape()[0]; }
  std::size_t out_features() const { return weight.shape()[1]; }

  Tensor<T> weight;  // [in x out]
  Tensor<T> bias;    // [out]
};

template <typename T>
class LayerNorm {
 public:
  LayerNorm() = default;
  LayerNorm(std::size_t width, double eps);

  Tensor<T> forward(const Tensor<T>& x) const;
  void collect(const std::string& prefix, std::vector<NamedTensor<T>>& out) const;

  Tensor<T> gain;
  Tensor<T> bias;
  T eps = T(1e-5);
};

struct StackConfig {
  std::size_t width = 32;
  std::size_t layers = 2;
  std::size_t heads = 2;
  std::size_t mlp_ratio = 2;
  double eps = 1e-5;
};

/// Pre-norm block: x + MHSA(LN(x)), then x + W2 gelu(W1 LN(x)).
template <typename T>
class TransformerBlock {
 public:
  TransformerBlock() = default;
  TransformerBlock(const StackConfig& cfg, Rng& rng);

  /// x is [batch*n x width]; attention never crosses sample boundaries.
  Tensor<T> forward(const Tensor<T>& x, std::size_t batch) const;
  void collect(const std::string& prefix, std::vector<NamedTensor<T>>& out) const;

 private:
  std::size_t heads_ = 1;
  LayerNorm<T> ln1_, ln2_;
  Linear<T> q_, k_, v_, o_;
  Linear<T> fc1_, fc2_;
};

/// `layers` blocks followed by a final layer norm.
template <typename T>
class TransformerStack {
 public:
  TransformerStack() = default;
  TransformerStack(const StackConfig& cfg, Rng& rng);

  Tensor<T> forward(const Tensor<T>& x, std::size_t batch) const;
  void collect(const std::string& prefix, std::vector<NamedTensor<T>>& out) const;

  std::size_t width() const noexcept { return width_; }
  std::size_t depth() const noexcept { return blocks_.size(); }

 private:
  std::size_t width_ = 0;
  std::vector<TransformerBlock<T>> blocks_;
  LayerNorm<T> final_;
};

/// Multi-head cross attention with a residual on the query stream:
///   query + O(attn(Q LN(query), K LN(kv), V LN(kv)))
/// Output has the query's shape for any key/value token count.
template <typename T>
class CrossAttention {
 public:
  CrossAttention() = default;
  CrossAttention(std::size_t query_width, std::size_t kv_width, std::size_t heads, double eps, Rng& rng);

  Tensor<T> forward(const Tensor<T>& query, const Tensor<T>& kv, std::size_t batch,
                    std::vector<T>* weights = nullptr) const;
  void collect(const std::string& prefix, std::vector<NamedTensor<T>>& out) const;

  std::size_t query_width() const { return q_.in_features(); }
  std::size_t kv_width() const { return k_.in_features(); }

  // Exposed for degeneracy checks (zeroed value path == identity).
  Linear<T>& value() { return v_; }
  Linear<T>& output() { return o_; }

 private:
  std::size_t heads_ = 1;
  LayerNorm<T> ln_q_, ln_kv_;
  Linear<T> q_, k_, v_, o_;
};

extern template class Linear<float>;
extern template class Linear<double>;
extern template class LayerNorm<float>;
extern template class LayerNorm<double>;
extern template class TransformerBlock<float>;
extern template class TransformerBlock<double>;
extern template class TransformerStack<float>;
extern template class TransformerStack<double>;
extern template class CrossAttention<float>;
extern template class CrossAttention<double>;

}  // namespace ow
