#pragma once

#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

#include "ow/registry.hpp"
#include "ow/tensor.hpp"

namespace ow {

/// Glorot-uniform [in x out] weight.
template <typename T>
Tensor<T> xavier_uniform(std::size_t in, std::size_t out, Rng& rng) {
  const double bound = std::sqrt(6.0 / double(in + out));
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<T> v(in * out);
  for (auto& x : v) x = T(dist(rng));
  return Tensor<T>::from({in, out}, std::move(v), true);
}

template <typename T>
Tensor<T> normal_init(Shape shape, double stddev, Rng& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  std::vector<T> v(element_count(shape));
  for (auto& x : v) x = T(dist(rng));
  return Tensor<T>::from(std::move(shape), std::move(v), true);
}

template <typename T>
Tensor<T> zeros_param(Shape shape) {
  return Tensor<T>::zeros(std::move(shape), true);
}

template <typename T>
Tensor<T> ones_param(Shape shape) {
  return Tensor<T>::full(std::move(shape), T(1), true);
}

}  // namespace ow
