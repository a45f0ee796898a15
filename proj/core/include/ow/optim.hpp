#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ow/tensor.hpp"

namespace ow {

enum class OptimizerKind { SgdMomentum, Adam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::Adam;
  double lr = 1e-3;
  double momentum = 0.9;  // sgd-momentum only
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Per-parameter optimizer state. `first` is the momentum buffer for SGD and
/// the first moment for Adam; `second` is unused by SGD.
template <typename T>
struct Moments {
  std::vector<T> first;
  std::vector<T> second;
  std::uint64_t steps = 0;
};

/// Applies one update to exactly the parameters it is handed. State is keyed
/// by parameter name, so a parameter that sits out some steps (an inactive
/// task head) keeps its own bias-correction count.
template <typename T>
class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig config = {}) : config_(config) {}

  /// Updates every parameter from its grad, then clears the grads. Throws
  /// std::invalid_argument naming the first parameter without a grad.
  void step(std::span<NamedTensor<T>> params);

  std::uint64_t step_count() const noexcept { return step_count_; }
  const OptimizerConfig& config() const noexcept { return config_; }

  const std::map<std::string, Moments<T>>& state() const noexcept { return state_; }
  void restore(std::map<std::string, Moments<T>> state, std::uint64_t step_count) {
    state_ = std::move(state);
    step_count_ = step_count;
  }

 private:
  OptimizerConfig config_;
  std::map<std::string, Moments<T>> state_;
  std::uint64_t step_count_ = 0;
};

extern template class Optimizer<float>;
extern template class Optimizer<double>;

}  // namespace ow
