#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace ow {

using Shape = std::vector<std::size_t>;

std::size_t element_count(const Shape& shape);
std::string shape_string(const Shape& shape);

namespace detail {

// One vertex of the define-by-run graph. Leaves (parameters, inputs) have no
// backward rule; interior nodes hold their parents and a closure that reads
// this node's grad and accumulates into the parents.
template <typename T>
struct Node {
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;  // empty == not yet accumulated
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  T* grad_buffer() {
    if (grad.empty()) grad.assign(value.size(), T(0));
    return grad.data();
  }
};

}  // namespace detail

/// Dense row-major array that records the operations applied to it so that
/// `backward()` can push gradients to every `requires_grad` ancestor.
///
/// Copies are shallow: two Tensor handles may refer to the same storage, which
/// is how parameters are shared between the model and the optimizer.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, T value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<T> values, bool requires_grad = false);
  static Tensor scalar(T value, bool requires_grad = false);

  bool defined() const noexcept { return node_ != nullptr; }

  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t numel() const { return node_->value.size(); }
  /// Leading extent; for rank-1 tensors, 1.
  std::size_t rows() const;
  /// Product of the trailing extents.
  std::size_t cols() const;

  std::span<const T> values() const { return node_->value; }
  std::span<T> mutable_values() { return node_->value; }
  T item() const;
  T at(std::size_t row, std::size_t col) const { return node_->value[row * cols() + col]; }

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool on) { node_->requires_grad = on; }
  bool has_grad() const { return !node_->grad.empty(); }
  std::span<const T> grad() const { return node_->grad; }
  std::span<T> mutable_grad() { return {node_->grad_buffer(), node_->value.size()}; }
  void clear_grad() { node_->grad.clear(); }

  /// Reverse sweep from this scalar. Interior grads are reset first; leaf
  /// grads accumulate across calls. Throws NumericError if a leaf gradient
  /// becomes non-finite.
  void backward() const;

  /// Copy of the values, cut from the graph.
  Tensor detach() const;

  bool same_storage(const Tensor& other) const noexcept { return node_ == other.node_; }

  // Used by op implementations.
  explicit Tensor(std::shared_ptr<detail::Node<T>> node) : node_(std::move(node)) {}
  const std::shared_ptr<detail::Node<T>>& node() const { return node_; }

 private:
  std::shared_ptr<detail::Node<T>> node_;
};

/// While alive, new ops on this thread record no graph (inference, embedding extraction).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_recording_enabled();

/// Builds an op result. `backward` is stored only if some parent requires grad
/// and recording is enabled. Public so tests can assemble custom ops.
template <typename T>
Tensor<T> make_op_result(Shape shape, std::vector<T> values, std::vector<Tensor<T>> parents,
                         std::function<void(detail::Node<T>&)> backward);

/// A named handle to a learnable tensor.
template <typename T>
struct NamedTensor {
  std::string name;
  Tensor<T> tensor;
};

extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace ow
