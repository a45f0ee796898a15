#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ow/tensor.hpp"

namespace ow {

/// Central differences (fn(p+h) - fn(p-h)) / 2h for every coordinate of every
/// tensor in `params`. `fn` must read the parameters through the given handles;
/// values are perturbed in place and restored.
template <typename T>
std::vector<std::vector<T>> finite_diff_grad(const std::function<T()>& fn, std::span<Tensor<T>> params, T h);

/// |analytic - numeric| / max(|analytic|, |numeric|, floor). The floor keeps
/// coordinates whose true gradient is ~0 from reporting roundoff as error.
double relative_error(double analytic, double numeric, double floor = 1e-6);

struct GroupError {
  std::string group;
  std::size_t coordinates = 0;
  double max_rel_err = 0;
  std::string worst_param;
};

struct GradCheckReport {
  std::vector<GroupError> groups;
  double tolerance = 0;

  bool passed() const;
  double worst() const;
};

/// Parameter names are "<group>/<path>", e.g. "g/block0.attn.q.w" -> "g".
std::string parameter_group(const std::string& name);

/// Runs `loss` once for analytic grads, then finite differences over every
/// parameter, and reports the worst relative error per parameter group.
template <typename T>
GradCheckReport check_gradients(const std::function<Tensor<T>()>& loss, std::span<NamedTensor<T>> params,
                                 T h, double tolerance);

}  // namespace ow
