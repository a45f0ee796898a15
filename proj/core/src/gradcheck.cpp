#include "ow/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace ow {

template <typename T>
std::vector<std::vector<T>> finite_diff_grad(const std::function<T()>& fn, std::span<Tensor<T>> params, T h) {
  NoGradGuard no_grad;
  std::vector<std::vector<T>> grads;
  grads.reserve(params.size());
  for (auto& p : params) {
    auto values = p.mutable_values();
    std::vector<T> g(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
      const T saved = values[i];
      values[i] = saved + h;
      const T up = fn();
      values[i] = saved - h;
      const T down = fn();
      values[i] = saved;
      g[i] = (up - down) / (T(2) * h);
    }
    grads.push_back(std::move(g));
  }
  return grads;
}

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

bool GradCheckReport::passed() const {
  return std::all_of(groups.begin(), groups.end(), [&](const GroupError& g) { return g.max_rel_err < tolerance; });
}

double GradCheckReport::worst() const {
  double w = 0;
  for (const auto& g : groups) w = std::max(w, g.max_rel_err);
  return w;
}

std::string parameter_group(const std::string& name) { return name.substr(0, name.find('/')); }

template <typename T>
GradCheckReport check_gradients(const std::function<Tensor<T>()>& loss, std::span<NamedTensor<T>> params, T h,
                                 double tolerance) {
  for (auto& p : params) p.tensor.clear_grad();
  loss().backward();

  std::vector<Tensor<T>> handles;
  handles.reserve(params.size());
  for (auto& p : params) handles.push_back(p.tensor);
  const std::function<T()> scalar = [&] { return loss().item(); };
  auto numeric = finite_diff_grad<T>(scalar, handles, h);

  std::map<std::string, GroupError> by_group;
  std::vector<std::string> order;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto group = parameter_group(params[i].name);
    auto [it, inserted] = by_group.try_emplace(group);
    if (inserted) {
      it->second.group = group;
      order.push_back(group);
    }
    auto& entry = it->second;
    auto analytic = params[i].tensor.grad();
    for (std::size_t j = 0; j < numeric[i].size(); ++j) {
      const double a = analytic.empty() ? 0.0 : double(analytic[j]);
      const double e = relative_error(a, double(numeric[i][j]));
      if (e > entry.max_rel_err || entry.worst_param.empty()) {
        if (e > entry.max_rel_err) entry.max_rel_err = e;
        entry.worst_param = params[i].name;
      }
      ++entry.coordinates;
    }
    params[i].tensor.clear_grad();
  }
  GradCheckReport report;
  report.tolerance = tolerance;
  for (const auto& g : order) report.groups.push_back(by_group[g]);
  return report;
}

template std::vector<std::vector<float>> finite_diff_grad(const std::function<float()>&, std::span<Tensor<float>>,
                                                          float);
template std::vector<std::vector<double>> finite_diff_grad(const std::function<double()>&,
                                                           std::span<Tensor<double>>, double);
template GradCheckReport check_gradients(const std::function<Tensor<float>()>&, std::span<NamedTensor<float>>,
                                         float, double);
template GradCheckReport check_gradients(const std::function<Tensor<double>()>&, std::span<NamedTensor<double>>,
                                         double, double);

}  // namespace ow
