#include <algorithm>
#include "ow/layers.hpp"

#include "ow/errors.hpp"
#include "ow/init.hpp"
#include "ow/ops.hpp"

namespace ow {

template <typename T>
Linear<T>::Linear(std::size_t in, std::size_t out, Rng& rng)
    : weight(xavier_uniform<T>(in, out, rng)), bias(zeros_param<T>({out})) {}

template <typename T>
Tensor<T> Linear<T>::forward(const Tensor<T>& x) const {
  return add_bias(matmul(x, weight), bias);
}

template <typename T>
void Linear<T>::collect(const std::string& prefix, std::vector<NamedTensor<T>>& out) const {
  out.push_back({prefix + ".w", weight});
  out.push_back({prefix + ".b", bias});
}

template <typename T>
LayerNorm<T>::LayerNorm(std::size_t width, double eps)
    : gain(ones_param<T>({width})), bias(zeros_param<T>({width})), eps(T(eps)) {}

template <typename T>
Tensor<T> LayerNorm<T>::forward(const Tensor<T>& x) const {
  return layer_norm(x, gain, bias, eps);
}

template <typename T>
void LayerNorm<T>::collect(const std::string& prefix, std::vector<NamedTensor<T>>& out) const {
  out.push_back({prefix + ".g", gain});
  out.push_back({prefix + ".b", bias});
}

template <typename T>
TransformerBlock<T>::TransformerBlock(const StackConfig& cfg, Rng& rng) : heads_(cfg.heads) {
  const std::size_t w = cfg.width, hidden = cfg.width * cfg.mlp_ratio;
  ln1_ = LayerNorm<T>(w, cfg.eps);
  q_ = Linear<T>(w, w, rng);
  k_ = Linear<T>(w, w, rng);
  v_ = Linear<T>(w, w, rng);
  o_ = Linear<T>(w, w, rng);
  ln2_ = LayerNorm<T>(w, cfg.eps);
  fc1_ = Linear<T>(w, hidden, rng);
  fc2_ = Linear<T>(hidden, w, rng);
}

template <typename T>
Tensor<T> TransformerBlock<T>::forward(const Tensor<T>& x, std::size_t batch) const {
  const auto h = ln1_.forward(x);
  const auto att = attention(q_.forward(h), k_.forward(h), v_.forward(h), batch, heads_);
  const auto x1 = add(x, o_.forward(att));
  const auto mlp = fc2_.forward(gelu(fc1_.forward(ln2_.forward(x1))));
  return add(x1, mlp);
}

template <typename T>
void TransformerBlock<T>::collect(const std::string& prefix, std::vector<NamedTensor<T>>& out) const {
  ln1_.collect(prefix + ".ln1", out);
  q_.collect(prefix + ".attn.q", out);
  k_.collect(prefix + ".attn.k", out);
  v_.collect(prefix + ".attn.v", out);
  o_.collect(prefix + ".attn.o", out);
  ln2_.collect(prefix + ".ln2", out);
  fc1_.collect(prefix + ".mlp.fc1", out);
  fc2_.collect(prefix + ".mlp.fc2", out);
}

template <typename T>
TransformerStack<T>::TransformerStack(const StackConfig& cfg, Rng& rng) : width_(cfg.width) {
  if (cfg.heads == 0 || cfg.width % cfg.heads != 0) {
    throw std::invalid_argument("transformer width " + std::to_string(cfg.width) + " not divisible by " +
                                std::to_string(cfg.heads) + " heads");
  }
  blocks_.reserve(cfg.layers);
  for (std::size_t i = 0; i < cfg.layers; ++i) blocks_.emplace_back(cfg, rng);
  final_ = LayerNorm<T>(cfg.width, cfg.eps);
}

template <typename T>
Tensor<T> TransformerStack<T>::forward(const Tensor<T>& x, std::size_t batch) const {
  if (x.rank() != 2 || x.cols() != width_) {
    throw ShapeError("transformer stack of width " + std::to_string(width_) + " got input " + shape_string(x.shape()));
  }
  Tensor<T> h = x;
  for (const auto& b : blocks_) h = b.forward(h, batch);
  return final_.forward(h);
}

template <typename T>
void TransformerStack<T>::collect(const std::string& prefix, std::vector<NamedTensor<T>>& out) const {
  for (std::size_t i = 0; i < blocks_.size(); ++i) blocks_[i].collect(prefix + "block" + std::to_string(i), out);
  final_.collect(prefix + "ln_final", out);
}

template <typename T>
CrossAttention<T>::CrossAttention(std::size_t query_width, std::size_t kv_width, std::size_t heads, double eps,
                                  Rng& rng)
    : heads_(heads) {
  if (heads == 0 || query_width % heads != 0) {
    throw std::invalid_argument("cross attention width " + std::to_string(query_width) + " not divisible by " +
                                std::to_string(heads) + " heads");
  }
  ln_q_ = LayerNorm<T>(query_width, eps);
  ln_kv_ = LayerNorm<T>(kv_width, eps);
  q_ = Linear<T>(query_width, query_width, rng);
  k_ = Linear<T>(kv_width, query_width, rng);
  v_ = Linear<T>(kv_width, query_width, rng);
  o_ = Linear<T>(query_width, query_width, rng);
  // Zero output projection: the block starts as the identity on its query.
  std::ranges::fill(o_.weight.mutable_values(), T(0));
}

template <typename T>
Tensor<T> CrossAttention<T>::forward(const Tensor<T>& query, const Tensor<T>& kv, std::size_t batch,
                                     std::vector<T>* weights) const {
  if (query.rank() != 2 || query.cols() != query_width()) {
    throw ShapeError("cross attention expects queries of width " + std::to_string(query_width()) + ", got " +
                     shape_string(query.shape()));
  }
  if (kv.rank() != 2 || kv.cols() != kv_width()) {
    throw ShapeError("cross attention expects keys/values of width " + std::to_string(kv_width()) + ", got " +
                     shape_string(kv.shape()));
  }
  const auto hq = ln_q_.forward(query);
  const auto hkv = ln_kv_.forward(kv);
  const auto att = attention(q_.forward(hq), k_.forward(hkv), v_.forward(hkv), batch, heads_, weights);
  return add(query, o_.forward(att));
}

template <typename T>
void CrossAttention<T>::collect(const std::string& prefix, std::vector<NamedTensor<T>>& out) const {
  ln_q_.collect(prefix + "ln_q", out);
  ln_kv_.collect(prefix + "ln_kv", out);
  q_.collect(prefix + "q", out);
  k_.collect(prefix + "k", out);
  v_.collect(prefix + "v", out);
  o_.collect(prefix + "o", out);
}

template class Linear<float>;
template class Linear<double>;
template class LayerNorm<float>;
template class LayerNorm<double>;
template class TransformerBlock<float>;
template class TransformerBlock<double>;
template class TransformerStack<float>;
template class TransformerStack<double>;
template class CrossAttention<float>;
template class CrossAttention<double>;

}  // namespace ow
