#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ow/tensor.hpp"

namespace ow {

/// tanh-approximation constant sqrt(2/pi) used by gelu().
inline constexpr double kGeluTanhScale = 0.7978845608;
inline constexpr double kGeluCubic = 0.044715;

// Differentiable primitives. Rank-2 operands are [rows x cols]; anything
// sequence-shaped is stored as [batch * tokens x width] with the batch count
// passed explicitly where samples must not mix (attention, pooling).

template <typename T> Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
/// x[r x c] + bias[c], bias broadcast over rows.
template <typename T> Tensor<T> add_bias(const Tensor<T>& x, const Tensor<T>& bias);
template <typename T> Tensor<T> scale(const Tensor<T>& x, T factor);
template <typename T> Tensor<T> relu(const Tensor<T>& x);
/// 0.5 x (1 + tanh(kGeluTanhScale (x + kGeluCubic x^3)))
template <typename T> Tensor<T> gelu(const Tensor<T>& x);
/// Max-subtracted softmax along `axis`.
template <typename T> Tensor<T> softmax(const Tensor<T>& x, std::size_t axis);
/// Normalizes over the last axis, then applies gain/bias.
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gain, const Tensor<T>& bias, T eps);
template <typename T> Tensor<T> sum(const Tensor<T>& x);
template <typename T> Tensor<T> mean(const Tensor<T>& x);

/// Mean squared difference over all elements.
template <typename T> Tensor<T> l2_loss(const Tensor<T>& pred, const Tensor<T>& target);
/// Mean over rows of -log softmax(logits)[label].
template <typename T> Tensor<T> cross_entropy(const Tensor<T>& logits, std::span<const int> labels);

/// Row i of the result is row idx[i] of x; repeated indices accumulate in backward.
template <typename T> Tensor<T> gather_rows(const Tensor<T>& x, std::span<const std::size_t> idx);
template <typename T> Tensor<T> concat_rows(std::span<const Tensor<T>> parts);
/// x is [segments * n x c]; returns the per-segment row mean, [segments x c].
template <typename T> Tensor<T> segment_mean(const Tensor<T>& x, std::size_t segments);

/// Scaled dot-product attention over `heads` column groups, independently per
/// sample. q is [batch * nq x d], k and v are [batch * nk x d]. If `weights`
/// is non-null it receives the softmax weights laid out [batch][head][nq][nk].
template <typename T>
Tensor<T> attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v, std::size_t batch,
                    std::size_t heads, std::vector<T>* weights = nullptr);

}  // namespace ow
