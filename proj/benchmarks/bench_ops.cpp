#include <benchmark/benchmark.h>

#include <random>

#include "ow/layers.hpp"
#include "ow/ops.hpp"

namespace {

using ow::Tensor;

Tensor<float> random_tensor(std::size_t rows, std::size_t cols, std::uint64_t seed, bool grad = false) {
  ow::Rng rng(seed);
  std::normal_distribution<float> d(0.0f, 1.0f);
  std::vector<float> v(rows * cols);
  for (auto& x : v) x = d(rng);
  return Tensor<float>::from(ow::Shape{rows, cols}, std::move(v), grad);
}

void BM_Matmul(benchmark::State& state) {
  const auto n = std::size_t(state.range(0));
  const auto a = random_tensor(n, n, 1), b = random_tensor(n, n, 2);
  ow::NoGradGuard ng;
  for (auto _ : state) benchmark::DoNotOptimize(ow::matmul(a, b).values().data());
  state.SetItemsProcessed(state.iterations() * std::int64_t(2 * n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(32)->Arg(64)->Arg(128);

void BM_AttentionForwardBackward(benchmark::State& state) {
  const std::size_t batch = 16, tokens = std::size_t(state.range(0)), width = 32;
  const auto q = random_tensor(batch * tokens, width, 3, true);
  const auto k = random_tensor(batch * tokens, width, 4, true);
  const auto v = random_tensor(batch * tokens, width, 5, true);
  for (auto _ : state) {
    auto loss = ow::sum(ow::attention(q, k, v, batch, 2));
    loss.backward();
    benchmark::DoNotOptimize(q.grad().data());
  }
}
BENCHMARK(BM_AttentionForwardBackward)->Arg(16)->Arg(32);

void BM_TransformerStack(benchmark::State& state) {
  ow::Rng rng(6);
  ow::StackConfig cfg;
  const ow::TransformerStack<float> stack(cfg, rng);
  const auto x = random_tensor(16 * 16, cfg.width, 7);
  ow::NoGradGuard ng;
  for (auto _ : state) benchmark::DoNotOptimize(stack.forward(x, 16).values().data());
}
BENCHMARK(BM_TransformerStack);

}  // namespace
