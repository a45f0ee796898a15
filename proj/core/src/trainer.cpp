#include "ow/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "json.hpp"
#include "ow/errors.hpp"
#include "ow/ops.hpp"
#include "ow/pretrain.hpp"

namespace ow {

using nlohmann::json;

namespace {

// 53-bit uniform in [0, 1), independent of the standard library's distributions.
double unit_draw(Rng& rng) { return double(rng() >> 11) * 0x1.0p-53; }

}  // namespace

std::pair<TaskSpec, TaskSpec> sample_pair(Rng& rng, const ModalityRegistry& registry) {
  std::vector<std::size_t> eligible;
  for (std::size_t m = 0; m < registry.size(); ++m) {
    if (!registry[m].tasks.empty()) eligible.push_back(m);
  }
  if (eligible.size() < 2) {
    throw std::invalid_argument("pair sampling needs two modalities with tasks, have " +
                                std::to_string(eligible.size()));
  }
  const auto [a, b] = sample_modality_pair(eligible.size(), rng);
  const auto& mi = registry[eligible[a]];
  const auto& mj = registry[eligible[b]];
  const auto ti = std::uniform_int_distribution<std::size_t>(0, mi.tasks.size() - 1)(rng);
  const auto tj = std::uniform_int_distribution<std::size_t>(0, mj.tasks.size() - 1)(rng);
  TaskSpec q = mi.tasks[ti], r = mj.tasks[tj];
  q.modality = eligible[a];
  q.task = ti;
  r.modality = eligible[b];
  r.task = tj;
  return {q, r};
}

std::size_t labeled_count(std::size_t n_train, double label_fraction) {
  if (!(label_fraction > 0.0) || label_fraction > 1.0) {
    throw std::invalid_argument("label fraction must lie in (0, 1]");
  }
  const auto k = static_cast<std::size_t>(std::lround(label_fraction * double(n_train)));
  return std::clamp<std::size_t>(k, 1, std::max<std::size_t>(n_train, 1));
}

PairBatch compose_batch(const TaskSpec& q, const TaskSpec& r, std::span<const SyntheticDataset> datasets,
                        std::size_t batch, std::map<TaskKey, DrawCursor>& cursors, Rng& rng,
                        double label_fraction) {
  if (batch < 2 || batch % 2 != 0) {
    throw ConfigError("stage3.batch", "batch size must be even and at least 2, got " + std::to_string(batch));
  }
  const std::size_t half = batch / 2;
  PairBatch pb;
  pb.q = q;
  pb.r = r;
  auto draw = [&](const TaskSpec& t, std::vector<std::size_t>& idx, std::vector<const Sample*>& out) {
    if (t.modality >= datasets.size()) throw std::invalid_argument("no dataset for modality " + std::to_string(t.modality));
    const auto train = datasets[t.modality].view(Split::Train);
    auto it = cursors.find(TaskKey::of(t));
    if (it == cursors.end()) {
      it = cursors.emplace(TaskKey::of(t), DrawCursor(labeled_count(train.size(), label_fraction))).first;
    }
    idx = it->second.draw(half, rng);
    for (std::size_t i : idx) out.push_back(&train[i]);
  };
  draw(q, pb.indices_q, pb.samples_q);
  draw(r, pb.indices_r, pb.samples_r);
  return pb;
}

// ---- LossBalancer ----

void BalancerConfig::validate() const {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw ConfigError("stage3.balancer.gamma", "must be finite and >= 0");
  if (!(floor > 0.0) || floor > 1.0) throw ConfigError("stage3.balancer.floor", "must lie in (0, 1]");
  if (!(cap >= 1.0) || !std::isfinite(cap)) throw ConfigError("stage3.balancer.cap", "must be finite and >= 1");
  if (epoch_steps == 0) throw ConfigError("stage3.epoch_steps", "must be positive");
}

LossBalancer::LossBalancer(BalancerConfig config) : config_(config) { config_.validate(); }

void LossBalancer::record(TaskKey task, double loss) {
  if (!std::isfinite(loss)) throw NumericError("non-finite task loss recorded");
  auto& r = running_[task];
  r.sum += loss;
  ++r.count;
}

void LossBalancer::end_step() {
  if (++steps_in_epoch_ < config_.epoch_steps) return;
  for (auto& [key, r] : running_) {
    if (r.count == 0) continue;
    auto& h = history_[key];
    h.push_back(r.sum / double(r.count));
    if (h.size() > 2) h.erase(h.begin());
  }
  running_.clear();
  steps_in_epoch_ = 0;
}

double LossBalancer::ratio(TaskKey task) const {
  const auto it = history_.find(task);
  if (it == history_.end() || it->second.size() < 2) return 1.0;
  const auto& h = it->second;
  if (!(h[0] > 0.0) || !(h[1] > 0.0)) throw NumericError("loss history holds a non-positive epoch mean");
  return h[1] / h[0];
}

std::pair<double, double> LossBalancer::weights(TaskKey q, TaskKey r) const {
  auto raw = [&](TaskKey k) { return std::clamp(std::pow(ratio(k), config_.gamma), config_.floor, config_.cap); };
  const double rq = raw(q), rr = raw(r);
  const double lo = std::max(config_.floor, 2.0 - config_.cap);
  const double hi = std::min(config_.cap, 2.0 - config_.floor);
  const double wq = std::clamp(2.0 * rq / (rq + rr), lo, hi);
  return {wq, 2.0 - wq};
}

std::vector<double> LossBalancer::history(TaskKey task) const {
  const auto it = history_.find(task);
  return it == history_.end() ? std::vector<double>{} : it->second;
}

void LossBalancer::set_history(TaskKey task, std::vector<double> values) {
  if (values.size() > 2) values.erase(values.begin(), values.end() - 2);
  history_[task] = std::move(values);
}

std::string LossBalancer::to_json() const {
  json j;
  j["steps_in_epoch"] = steps_in_epoch_;
  j["history"] = json::array();
  for (const auto& [k, h] : history_) j["history"].push_back({{"modality", k.modality}, {"task", k.task}, {"values", h}});
  j["running"] = json::array();
  for (const auto& [k, r] : running_) {
    j["running"].push_back({{"modality", k.modality}, {"task", k.task}, {"sum", r.sum}, {"count", r.count}});
  }
  return j.dump();
}

LossBalancer LossBalancer::from_json(std::string_view text, BalancerConfig config) {
  const auto j = json::parse(text);
  LossBalancer b(config);
  b.steps_in_epoch_ = j.at("steps_in_epoch").get<std::size_t>();
  for (const auto& e : j.at("history")) {
    b.history_[{e.at("modality").get<std::size_t>(), e.at("task").get<std::size_t>()}] =
        e.at("values").get<std::vector<double>>();
  }
  for (const auto& e : j.at("running")) {
    b.running_[{e.at("modality").get<std::size_t>(), e.at("task").get<std::size_t>()}] =
        Running{e.at("sum").get<double>(), e.at("count").get<std::size_t>()};
  }
  return b;
}

std::pair<double, double> balance_weights(const LossBalancer& balancer, const TaskSpec& q, const TaskSpec& r) {
  return balancer.weights(TaskKey::of(q), TaskKey::of(r));
}

// ---- TrainState ----

std::string TrainState::to_json() const {
  json j;
  j["step"] = step;
  j["balancer"] = json::parse(balancer.to_json());
  j["cursors"] = json::array();
  for (const auto& [k, c] : cursors) {
    j["cursors"].push_back({{"modality", k.modality},
                            {"task", k.task},
                            {"count", c.count()},
                            {"order", c.order()},
                            {"position", c.position()}});
  }
  return j.dump();
}

TrainState TrainState::from_json(std::string_view text, const BalancerConfig& config) {
  const auto j = json::parse(text);
  TrainState s;
  s.step = j.at("step").get<std::size_t>();
  s.balancer = LossBalancer::from_json(j.at("balancer").dump(), config);
  for (const auto& e : j.at("cursors")) {
    DrawCursor c(e.at("count").get<std::size_t>());
    c.restore(e.at("order").get<std::vector<std::size_t>>(), e.at("position").get<std::size_t>());
    s.cursors.emplace(TaskKey{e.at("modality").get<std::size_t>(), e.at("task").get<std::size_t>()}, std::move(c));
  }
  return s;
}

// ---- losses and steps ----

template <typename T>
Tensor<T> task_loss(const Tensor<T>& pred, const TaskSpec& task, std::span<const Sample* const> samples) {
  if (task.kind == TaskKind::Classification) {
    std::vector<int> labels;
    labels.reserve(samples.size());
    for (const Sample* s : samples) {
      if (task.task >= s->targets.size()) throw std::invalid_argument("sample lacks a target for task " + task.name);
      labels.push_back(s->targets[task.task].label);
    }
    return cross_entropy(pred, std::span<const int>(labels));
  }
  std::vector<T> target;
  target.reserve(pred.numel());
  for (const Sample* s : samples) {
    if (task.task >= s->targets.size()) throw std::invalid_argument("sample lacks a target for task " + task.name);
    const auto& d = s->targets[task.task].dense;
    target.insert(target.end(), d.begin(), d.end());
  }
  if (target.size() != pred.numel()) {
    throw ShapeError("dense target has " + std::to_string(target.size()) + " values, prediction " +
                     shape_string(pred.shape()));
  }
  return l2_loss(pred, Tensor<T>::from(pred.shape(), std::move(target)));
}

template <typename T>
Stage3Loss<T> stage3_loss(const ModelBundle<T>& bundle, const PairBatch& batch, double w_q, double w_r,
                          bool weighted) {
  const auto x_i = bundle.tokenizer(batch.q.modality).tokenize(std::span<const Sample* const>(batch.samples_q));
  const auto x_j = bundle.tokenizer(batch.r.modality).tokenize(std::span<const Sample* const>(batch.samples_r));
  const auto pred = forward_pair(bundle, x_i, x_j, batch.q, batch.r, batch.fuse_out);
  Stage3Loss<T> out;
  out.loss_q = task_loss(pred.pred_q, batch.q, std::span<const Sample* const>(batch.samples_q));
  out.loss_r = task_loss(pred.pred_r, batch.r, std::span<const Sample* const>(batch.samples_r));
  out.total = weighted ? add(scale(out.loss_q, T(w_q)), scale(out.loss_r, T(w_r))) : add(out.loss_q, out.loss_r);
  return out;
}

template <typename T>
std::vector<NamedTensor<T>> stage3_parameters(const ModelBundle<T>& bundle, const TaskSpec& q, const TaskSpec& r,
                                              bool fuse_out) {
  const auto& reg = bundle.registry();
  const std::string keep[] = {ModelBundle<T>::tokenizer_group(reg.at(q.modality)),
                              ModelBundle<T>::tokenizer_group(reg.at(r.modality)),
                              ModelBundle<T>::head_group(reg.at(q.modality), q),
                              ModelBundle<T>::head_group(reg.at(r.modality), r),
                              "f.stack", "f.fc", "a_mid", "a_out", "g"};
  return bundle.parameters(
      [&](std::string_view g) {
        if (g == "a_out" && !fuse_out) return false;
        return std::find(std::begin(keep), std::end(keep), g) != std::end(keep);
      });
}

template <typename T>
StepResult train_step(ModelBundle<T>& bundle, const PairBatch& batch, TrainState& state, Optimizer<T>& opt,
                      const Stage3Config& cfg) {
  StepResult res;
  res.step = state.step;
  res.q = batch.q;
  res.r = batch.r;
  if (cfg.balance) std::tie(res.w_q, res.w_r) = balance_weights(state.balancer, batch.q, batch.r);
  const auto loss = stage3_loss(bundle, batch, res.w_q, res.w_r, cfg.balance);
  res.loss_q = double(loss.loss_q.item());
  res.loss_r = double(loss.loss_r.item());
  res.total = double(loss.total.item());
  if (!std::isfinite(res.total)) throw NumericError("stage 3 loss is not finite at step " + std::to_string(state.step));
  loss.total.backward();
  auto params = stage3_parameters(bundle, batch.q, batch.r, batch.fuse_out);
  opt.step(params);
  for (auto& p : bundle.parameters()) p.tensor.clear_grad();
  state.balancer.record(TaskKey::of(batch.q), res.loss_q);
  state.balancer.record(TaskKey::of(batch.r), res.loss_r);
  state.balancer.end_step();
  ++state.step;
  return res;
}

template <typename T>
std::vector<StepResult> train_loop(ModelBundle<T>& bundle, std::span<const SyntheticDataset> datasets,
                                   const Stage3Config& cfg, std::uint64_t seed, TrainState& state,
                                   Optimizer<T>& opt, std::size_t until_step, MetricsWriter* metrics) {
  if (datasets.size() != bundle.modalities()) throw std::invalid_argument("stage 3 needs one dataset per modality");
  std::vector<StepResult> log;
  const auto& reg = bundle.registry();
  while (state.step < until_step) {
    Rng rng = derive_rng(seed, {3, state.step});
    const auto [q, r] = sample_pair(rng, reg);
    auto batch = compose_batch(q, r, datasets, cfg.batch, state.cursors, rng, cfg.label_fraction);
    batch.fuse_out = unit_draw(rng) >= cfg.out_fusion_drop;
    const auto res = train_step(bundle, batch, state, opt, cfg);
    if (metrics != nullptr) {
      metrics->write(json{{"stage", 3},
                          {"step", res.step},
                          {"mod_i", reg[q.modality].name},
                          {"task_q", q.name},
                          {"mod_j", reg[r.modality].name},
                          {"task_r", r.name},
                          {"loss_q", res.loss_q},
                          {"loss_r", res.loss_r},
                          {"w_q", res.w_q},
                          {"w_r", res.w_r},
                          {"total", res.total}}
                         .dump());
    }
    log.push_back(res);
  }
  return log;
}

// ---- evaluation ----

double binary_miou(std::span<const double> pred, std::span<const double> target, double threshold) {
  if (pred.size() != target.size()) throw ShapeError("miou: prediction and target sizes differ");
  double inter[2] = {0, 0}, uni[2] = {0, 0};
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const int p = pred[i] > threshold ? 1 : 0;
    const int t = target[i] > threshold ? 1 : 0;
    for (int c = 0; c < 2; ++c) {
      const bool pc = p == c, tc = t == c;
      inter[c] += (pc && tc) ? 1 : 0;
      uni[c] += (pc || tc) ? 1 : 0;
    }
  }
  double total = 0;
  int classes = 0;
  for (int c = 0; c < 2; ++c) {
    if (uni[c] > 0) {
      total += inter[c] / uni[c];
      ++classes;
    }
  }
  return classes == 0 ? 1.0 : total / classes;
}

std::string EvalReport::to_json() const {
  json j{{"modality", modality}, {"task", task}, {"metric", metric}, {"value", value}, {"n", n}};
  if (metric == "l2") j["miou"] = miou;
  return j.dump();
}

template <typename T>
EvalReport evaluate(const ModelBundle<T>& bundle, const TaskSpec& task, const SyntheticDataset& dataset, Split split,
                    std::size_t batch) {
  const auto data = dataset.view(split);
  if (data.empty()) throw std::invalid_argument("evaluate: empty dataset split");
  if (batch == 0) throw std::invalid_argument("evaluate: batch must be positive");
  bundle.head(task);
  const auto& tok = bundle.tokenizer(task.modality);
  NoGradGuard no_grad;

  EvalReport rep;
  rep.modality = bundle.registry().at(task.modality).name;
  rep.task = task.name;
  rep.n = data.size();
  std::size_t correct = 0;
  std::vector<double> preds, targets;
  for (std::size_t start = 0; start < data.size(); start += batch) {
    const std::size_t end = std::min(data.size(), start + batch);
    std::vector<const Sample*> samples;
    for (std::size_t i = start; i < end; ++i) samples.push_back(&data[i]);
    const auto out = forward_inference(bundle, tok.tokenize(std::span<const Sample* const>(samples)), task);
    const auto v = out.values();
    if (task.kind == TaskKind::Classification) {
      const std::size_t k = out.cols();
      for (std::size_t b = 0; b < samples.size(); ++b) {
        const auto row = v.subspan(b * k, k);
        const auto arg = std::size_t(std::max_element(row.begin(), row.end()) - row.begin());
        correct += int(arg) == samples[b]->targets[task.task].label ? 1 : 0;
      }
    } else {
      preds.insert(preds.end(), v.begin(), v.end());
      for (const Sample* s : samples) {
        const auto& d = s->targets[task.task].dense;
        targets.insert(targets.end(), d.begin(), d.end());
      }
    }
  }
  if (task.kind == TaskKind::Classification) {
    rep.metric = "accuracy";
    rep.accuracy = double(correct) / double(data.size());
    rep.value = rep.accuracy;
  } else {
    if (preds.size() != targets.size()) throw ShapeError("dense targets do not match predictions");
    double se = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) se += (preds[i] - targets[i]) * (preds[i] - targets[i]);
    rep.metric = "l2";
    rep.l2 = se / double(preds.size());
    rep.value = rep.l2;
    rep.miou = binary_miou(preds, targets);
  }
  return rep;
}

// ---- adaptation ----

template <typename T>
Adapter<T>::Adapter(std::size_t in, std::size_t hidden, std::size_t classes, Rng& rng)
    : fc1_(in, hidden, rng), fc2_(hidden, classes, rng) {}

template <typename T>
Tensor<T> Adapter<T>::forward(const Tensor<T>& embeddings) const {
  return fc2_.forward(relu(fc1_.forward(embeddings)));
}

template <typename T>
std::vector<NamedTensor<T>> Adapter<T>::parameters() const {
  std::vector<NamedTensor<T>> out;
  fc1_.collect("adapter/fc1", out);
  fc2_.collect("adapter/fc2", out);
  return out;
}

template <typename T>
double adapter_accuracy(const Adapter<T>& adapter, const Tensor<T>& embeddings, std::span<const int> labels) {
  NoGradGuard no_grad;
  const auto logits = adapter.forward(embeddings);
  const std::size_t k = logits.cols();
  const auto v = logits.values();
  std::size_t correct = 0;
  for (std::size_t b = 0; b < labels.size(); ++b) {
    const auto row = v.subspan(b * k, k);
    correct += int(std::max_element(row.begin(), row.end()) - row.begin()) == labels[b] ? 1 : 0;
  }
  return labels.empty() ? 0.0 : double(correct) / double(labels.size());
}

template <typename T>
std::pair<Adapter<T>, double> train_adapter(const Tensor<T>& embeddings, std::span<const int> labels,
                                            std::size_t classes, const AdaptConfig& cfg) {
  if (embeddings.rows() != labels.size()) throw ShapeError("adapter: one label per embedding row required");
  Rng rng = derive_rng(cfg.seed, {3});
  Adapter<T> adapter(embeddings.cols(), cfg.hidden, classes, rng);
  OptimizerConfig oc;
  oc.lr = cfg.lr;
  Optimizer<T> opt(oc);
  const auto input = embeddings.detach();
  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    const auto loss = cross_entropy(adapter.forward(input), labels);
    if (!std::isfinite(double(loss.item()))) throw NumericError("adapter loss is not finite");
    loss.backward();
    auto params = adapter.parameters();
    opt.step(params);
  }
  const double acc = adapter_accuracy(adapter, input, labels);
  return {std::move(adapter), acc};
}

std::string AdaptReport::to_json() const {
  return json{{"task", task},
              {"train_pool", train_pool},
              {"sampled", sampled},
              {"test_count", test_count},
              {"train_accuracy", train_accuracy},
              {"test_accuracy", test_accuracy},
              {"checksum_before", checksum_before},
              {"checksum_after", checksum_after}}
      .dump();
}

namespace {

template <typename T>
Tensor<T> embed_all(const ModelBundle<T>& bundle, const Tokenizer<T>& tok, const std::vector<const Sample*>& samples) {
  NoGradGuard no_grad;
  std::vector<T> values;
  constexpr std::size_t chunk = 64;
  for (std::size_t start = 0; start < samples.size(); start += chunk) {
    const std::size_t end = std::min(samples.size(), start + chunk);
    const std::span<const Sample* const> part(samples.data() + start, end - start);
    const auto e = embed(bundle, tok.tokenize(part));
    values.insert(values.end(), e.values().begin(), e.values().end());
  }
  return Tensor<T>::from({samples.size(), bundle.dims().d_red}, std::move(values));
}

}  // namespace

template <typename T>
AdaptReport adapt_unseen(const ModelBundle<T>& bundle, const SyntheticDataset& dataset, TokenizerConfig tokenizer,
                         std::size_t task, const AdaptConfig& cfg) {
  if (!(cfg.fraction > 0.0) || cfg.fraction > 1.0) {
    throw std::invalid_argument("adaptation fraction must lie in (0, 1], got " + std::to_string(cfg.fraction));
  }
  if (task >= dataset.tasks.size()) throw std::invalid_argument("adaptation task index out of range");
  const auto& spec = dataset.tasks[task];
  if (spec.kind != TaskKind::Classification) throw std::invalid_argument("adaptation supports classification tasks");
  if (tokenizer.family != dataset.family) throw std::invalid_argument("tokenizer family does not match the dataset");
  tokenizer.d_tok = bundle.dims().d_tok;
  tokenizer.validate();

  AdaptReport rep;
  rep.task = spec.name;
  rep.checksum_before = bundle.checksum();

  Rng tok_rng = derive_rng(cfg.seed, {1});
  auto tok = make_tokenizer<T>(tokenizer, bundle.modalities(), tok_rng);
  const auto train = dataset.view(Split::Train);
  const auto test = dataset.view(Split::Test);
  if (train.empty()) throw std::invalid_argument("adaptation dataset has an empty train split");
  if (auto* table = dynamic_cast<TableTokenizer<T>*>(tok.get())) table->fit(train);

  rep.train_pool = train.size();
  rep.sampled = std::max<std::size_t>(1, std::size_t(std::lround(cfg.fraction * double(train.size()))));
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t(0));
  Rng pick_rng = derive_rng(cfg.seed, {2});
  std::shuffle(order.begin(), order.end(), pick_rng);
  order.resize(rep.sampled);
  std::sort(order.begin(), order.end());

  std::vector<const Sample*> chosen;
  std::vector<int> labels;
  for (std::size_t i : order) {
    chosen.push_back(&train[i]);
    labels.push_back(train[i].targets[task].label);
  }
  const auto emb = embed_all(bundle, *tok, chosen);
  auto [adapter, acc] = train_adapter(emb, std::span<const int>(labels), spec.classes, cfg);
  rep.train_accuracy = acc;

  rep.test_count = test.size();
  if (!test.empty()) {
    std::vector<const Sample*> test_samples;
    std::vector<int> test_labels;
    for (const auto& s : test) {
      test_samples.push_back(&s);
      test_labels.push_back(s.targets[task].label);
    }
    rep.test_accuracy = adapter_accuracy(adapter, embed_all(bundle, *tok, test_samples), std::span<const int>(test_labels));
  }
  rep.checksum_after = bundle.checksum();
  if (rep.checksum_after != rep.checksum_before) throw std::logic_error("adaptation modified the frozen bundle");
  return rep;
}

#define OW_INSTANTIATE_TRAINER(T)                                                                                \
  template Tensor<T> task_loss(const Tensor<T>&, const TaskSpec&, std::span<const Sample* const>);               \
  template Stage3Loss<T> stage3_loss(const ModelBundle<T>&, const PairBatch&, double, double, bool);             \
  template std::vector<NamedTensor<T>> stage3_parameters(const ModelBundle<T>&, const TaskSpec&, const TaskSpec&,  \
                                                         bool);                                                  \
  template StepResult train_step(ModelBundle<T>&, const PairBatch&, TrainState&, Optimizer<T>&,                  \
                                 const Stage3Config&);                                                           \
  template std::vector<StepResult> train_loop(ModelBundle<T>&, std::span<const SyntheticDataset>,                \
                                              const Stage3Config&, std::uint64_t, TrainState&, Optimizer<T>&,    \
                                              std::size_t, MetricsWriter*);                                      \
  template EvalReport evaluate(const ModelBundle<T>&, const TaskSpec&, const SyntheticDataset&, Split,           \
                               std::size_t);                                                                     \
  template class Adapter<T>;                                                                                     \
  template double adapter_accuracy(const Adapter<T>&, const Tensor<T>&, std::span<const int>);                   \
  template std::pair<Adapter<T>, double> train_adapter(const Tensor<T>&, std::span<const int>, std::size_t,      \
                                                       const AdaptConfig&);                                      \
  template AdaptReport adapt_unseen(const ModelBundle<T>&, const SyntheticDataset&, TokenizerConfig,             \
                                    std::size_t, const AdaptConfig&);

OW_INSTANTIATE_TRAINER(float)
OW_INSTANTIATE_TRAINER(double)

}  // namespace ow
