#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ow/data.hpp"
#include "ow/metrics.hpp"
#include "ow/model.hpp"
#include "ow/optim.hpp"
#include "ow/registry.hpp"

namespace ow {

struct TaskKey {
  std::size_t modality = 0;
  std::size_t task = 0;

  static TaskKey of(const TaskSpec& t) { return {t.modality, t.task}; }
  auto operator<=>(const TaskKey&) const = default;
};

/// Uniform unordered pair over modalities that have at least one task, then a
/// uniform task within each. `first` lives on the lower modality index.
std::pair<TaskSpec, TaskSpec> sample_pair(Rng& rng, const ModalityRegistry& registry);

struct PairBatch {
  TaskSpec q;
  TaskSpec r;
  std::vector<std::size_t> indices_q;  // into the train split of q's dataset
  std::vector<std::size_t> indices_r;
  std::vector<const Sample*> samples_q;
  std::vector<const Sample*> samples_r;
  bool fuse_out = true;  // false: heads read the xhat halves directly
};

/// max(1, round(fraction * n)): the labeled prefix of a train split.
std::size_t labeled_count(std::size_t n_train, double label_fraction);

/// B/2 draws per task from its cursor; cursors are created on first use over
/// the labeled prefix. Throws ConfigError for odd or < 2 B.
PairBatch compose_batch(const TaskSpec& q, const TaskSpec& r, std::span<const SyntheticDataset> datasets,
                        std::size_t batch, std::map<TaskKey, DrawCursor>& cursors, Rng& rng,
                        double label_fraction = 1.0);

struct BalancerConfig {
  double gamma = 1.0;
  double floor = 0.2;
  double cap = 5.0;
  std::size_t epoch_steps = 50;

  void validate() const;
};

/// Convergence-rate loss weighting. Per task it keeps the last two epoch-mean
/// losses; rho = L(k-1) / L(k-2) (1 without two entries), raw = clamp(rho^gamma),
/// w = 2 raw / (raw_q + raw_r), and the pair is kept inside [floor, cap] while
/// summing to 2.
class LossBalancer {
 public:
  explicit LossBalancer(BalancerConfig config = {});

  const BalancerConfig& config() const noexcept { return config_; }

  /// Adds a step loss to the running epoch mean of `task`. Throws NumericError
  /// for non-finite losses.
  void record(TaskKey task, double loss);
  /// Counts a finished step; every `epoch_steps` steps the running means move
  /// into the history.
  void end_step();

  double ratio(TaskKey task) const;
  /// Throws NumericError when the history holds a non-positive loss.
  std::pair<double, double> weights(TaskKey q, TaskKey r) const;

  std::vector<double> history(TaskKey task) const;
  void set_history(TaskKey task, std::vector<double> values);

  std::string to_json() const;
  static LossBalancer from_json(std::string_view text, BalancerConfig config);

 private:
  struct Running {
    double sum = 0;
    std::size_t count = 0;
  };
  BalancerConfig config_;
  std::map<TaskKey, std::vector<double>> history_;
  std::map<TaskKey, Running> running_;
  std::size_t steps_in_epoch_ = 0;
};

std::pair<double, double> balance_weights(const LossBalancer& balancer, const TaskSpec& q, const TaskSpec& r);

struct Stage3Config {
  std::size_t steps = 2000;
  std::size_t batch = 16;
  double label_fraction = 1.0;
  bool balance = true;  // false: plain sum of the two losses
  double out_fusion_drop = 0.5;  // share of steps that bypass A_out
  BalancerConfig balancer{};
  OptimizerConfig optimizer{};
};

/// Everything besides parameters and optimizer moments needed to resume.
struct TrainState {
  std::size_t step = 0;
  LossBalancer balancer;
  std::map<TaskKey, DrawCursor> cursors;

  std::string to_json() const;
  static TrainState from_json(std::string_view text, const BalancerConfig& config);
};

/// Task loss on predictions for a list of samples: cross-entropy on labels or
/// l2 on the stacked per-token targets.
template <typename T>
Tensor<T> task_loss(const Tensor<T>& pred, const TaskSpec& task, std::span<const Sample* const> samples);

template <typename T>
struct Stage3Loss {
  Tensor<T> loss_q;
  Tensor<T> loss_r;
  Tensor<T> total;
};

/// w_q * l_q + w_r * l_r through forward_pair; `weighted == false` gives l_q + l_r.
template <typename T>
Stage3Loss<T> stage3_loss(const ModelBundle<T>& bundle, const PairBatch& batch, double w_q, double w_r,
                          bool weighted = true);

template <typename T>
std::vector<NamedTensor<T>> stage3_parameters(const ModelBundle<T>& bundle, const TaskSpec& q, const TaskSpec& r,
                                              bool fuse_out = true);

struct StepResult {
  std::size_t step = 0;
  TaskSpec q;
  TaskSpec r;
  double loss_q = 0;
  double loss_r = 0;
  double w_q = 1;
  double w_r = 1;
  double total = 0;
};

template <typename T>
StepResult train_step(ModelBundle<T>& bundle, const PairBatch& batch, TrainState& state, Optimizer<T>& opt,
                      const Stage3Config& cfg);

/// Runs steps state.step .. until_step - 1. Each step draws its randomness
/// from (seed, 3, step), so a restored state continues the same sequence.
template <typename T>
std::vector<StepResult> train_loop(ModelBundle<T>& bundle, std::span<const SyntheticDataset> datasets,
                                   const Stage3Config& cfg, std::uint64_t seed, TrainState& state,
                                   Optimizer<T>& opt, std::size_t until_step, MetricsWriter* metrics = nullptr);

struct EvalReport {
  std::string modality;
  std::string task;
  std::string metric;  // "accuracy" or "l2"
  double value = 0;
  std::size_t n = 0;
  double accuracy = 0;  // classification
  double l2 = 0;        // dense: mean per-element squared error
  double miou = 0;      // dense: mean IoU of {0,1} labels at threshold 0.5

  std::string to_json() const;
};

/// Batched forward_inference over one split, without recording a graph.
/// Throws std::invalid_argument on an empty split.
template <typename T>
EvalReport evaluate(const ModelBundle<T>& bundle, const TaskSpec& task, const SyntheticDataset& dataset,
                    Split split, std::size_t batch = 64);

/// Mean IoU over the label values {0, 1} present in prediction or target.
double binary_miou(std::span<const double> pred, std::span<const double> target, double threshold = 0.5);

struct AdaptConfig {
  double fraction = 0.10;
  std::size_t hidden = 32;
  std::size_t epochs = 400;
  double lr = 1e-2;
  std::uint64_t seed = 11;
};

/// Two fully connected layers on frozen embeddings.
template <typename T>
class Adapter {
 public:
  Adapter() = default;
  Adapter(std::size_t in, std::size_t hidden, std::size_t classes, Rng& rng);

  Tensor<T> forward(const Tensor<T>& embeddings) const;
  std::vector<NamedTensor<T>> parameters() const;

 private:
  Linear<T> fc1_, fc2_;
};

/// Trains an adapter full-batch; returns it with its final train accuracy.
template <typename T>
std::pair<Adapter<T>, double> train_adapter(const Tensor<T>& embeddings, std::span<const int> labels,
                                            std::size_t classes, const AdaptConfig& cfg);

template <typename T>
double adapter_accuracy(const Adapter<T>& adapter, const Tensor<T>& embeddings, std::span<const int> labels);

struct AdaptReport {
  std::string task;
  std::size_t train_pool = 0;
  std::size_t sampled = 0;
  std::size_t test_count = 0;
  double train_accuracy = 0;
  double test_accuracy = 0;
  std::uint64_t checksum_before = 0;
  std::uint64_t checksum_after = 0;

  std::string to_json() const;
};

/// Frozen-trunk adaptation to a dataset of an unregistered modality: a fresh
/// tokenizer (table tokenizers are fitted on the train split), embeddings =
/// mean-pooled g(f(x)) of a random `fraction` of the train split, and a
/// 2-layer adapter on top. Throws std::invalid_argument for fraction outside (0, 1].
template <typename T>
AdaptReport adapt_unseen(const ModelBundle<T>& bundle, const SyntheticDataset& dataset, TokenizerConfig tokenizer,
                         std::size_t task, const AdaptConfig& cfg);

}  // namespace ow
