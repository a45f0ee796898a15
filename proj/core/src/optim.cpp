#include "ow/optim.hpp"

#include <cmath>
#include <stdexcept>

#include "ow/errors.hpp"

namespace ow {

template <typename T>
void Optimizer<T>::step(std::span<NamedTensor<T>> params) {
  for (const auto& p : params) {
    if (!p.tensor.has_grad()) throw std::invalid_argument("optimizer step: parameter '" + p.name + "' has no gradient");
  }
  for (auto& p : params) {
    auto values = p.tensor.mutable_values();
    auto grad = p.tensor.grad();
    auto& m = state_[p.name];
    if (m.first.size() != values.size()) {
      if (m.steps != 0) throw ShapeError("optimizer state for '" + p.name + "' does not match parameter shape");
      m.first.assign(values.size(), T(0));
      if (config_.kind == OptimizerKind::Adam) m.second.assign(values.size(), T(0));
    }
    ++m.steps;
    const T lr = T(config_.lr);
    if (config_.kind == OptimizerKind::SgdMomentum) {
      const T mu = T(config_.momentum);
      for (std::size_t i = 0; i < values.size(); ++i) {
        m.first[i] = mu * m.first[i] + grad[i];
        values[i] -= lr * m.first[i];
      }
    } else {
      const T b1 = T(config_.beta1), b2 = T(config_.beta2), eps = T(config_.eps);
      const T c1 = T(1) - T(std::pow(config_.beta1, double(m.steps)));
      const T c2 = T(1) - T(std::pow(config_.beta2, double(m.steps)));
      for (std::size_t i = 0; i < values.size(); ++i) {
        const T g = grad[i];
        m.first[i] = b1 * m.first[i] + (T(1) - b1) * g;
        m.second[i] = b2 * m.second[i] + (T(1) - b2) * g * g;
        const T mhat = m.first[i] / c1;
        const T vhat = m.second[i] / c2;
        values[i] -= lr * mhat / (std::sqrt(vhat) + eps);
      }
    }
    p.tensor.clear_grad();
  }
  ++step_count_;
}

template class Optimizer<float>;
template class Optimizer<double>;

}  // namespace ow
