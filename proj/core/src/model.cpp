#include "ow/model.hpp"

#include <cstring>
#include <set>
#include <stdexcept>

#include "ow/errors.hpp"
#include "ow/init.hpp"
#include "ow/ops.hpp"

namespace ow {

void ModelDims::validate() const {
  auto fail = [](const std::string& m) { throw std::invalid_argument(m); };
  if (d_tok == 0 || d_red == 0) fail("model widths must be positive");
  if (heads == 0) fail("head count must be positive");
  if (d_tok % heads != 0) fail("d_tok " + std::to_string(d_tok) + " not divisible by " + std::to_string(heads) + " heads");
  if (d_red % heads != 0) fail("d_red " + std::to_string(d_red) + " not divisible by " + std::to_string(heads) + " heads");
  if (mlp_ratio == 0) fail("mlp_ratio must be positive");
  if (!(ln_eps > 0)) fail("ln_eps must be positive");
}

namespace {

StackConfig stack_config(const ModelDims& d, std::size_t width, std::size_t layers) {
  return StackConfig{width, layers, d.heads, d.mlp_ratio, d.ln_eps};
}

}  // namespace

std::vector<std::size_t> interleave_rows(std::size_t batch, std::size_t count_a, std::size_t count_b) {
  std::vector<std::size_t> idx;
  idx.reserve(batch * (count_a + count_b));
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t t = 0; t < count_a; ++t) idx.push_back(b * count_a + t);
    for (std::size_t t = 0; t < count_b; ++t) idx.push_back(batch * count_a + b * count_b + t);
  }
  return idx;
}

// ---- FeatureTransform ----

template <typename T>
FeatureTransform<T>::FeatureTransform(const ModelDims& dims, Rng& rng)
    : stack_(stack_config(dims, dims.d_tok, dims.f_layers), rng),
      fc1_(dims.d_tok, dims.d_tok, rng),
      fc2_(dims.d_tok, dims.d_red, rng),
      fc3_(dims.d_red, dims.d_red, rng) {}

template <typename T>
Tensor<T> FeatureTransform<T>::encode(const Tensor<T>& x, std::size_t batch) const {
  return stack_.forward(x, batch);
}

template <typename T>
Tensor<T> FeatureTransform<T>::reduce(const Tensor<T>& h) const {
  return fc3_.forward(relu(fc2_.forward(relu(fc1_.forward(h)))));
}

template <typename T>
void FeatureTransform<T>::collect(const std::string& stack_prefix, const std::string& fc_prefix,
                                  std::vector<NamedTensor<T>>& out) const {
  stack_.collect(stack_prefix, out);
  fc1_.collect(fc_prefix + "fc1", out);
  fc2_.collect(fc_prefix + "fc2", out);
  fc3_.collect(fc_prefix + "fc3", out);
}

// ---- TaskHead ----

template <typename T>
TaskHead<T>::TaskHead(const TaskSpec& spec, const ModelDims& dims, Rng& rng)
    : spec_(spec),
      stack_(stack_config(dims, dims.d_red, dims.head_layers), rng),
      out_(dims.d_red, spec.arity(), rng) {}

template <typename T>
Tensor<T> TaskHead<T>::forward(const Tensor<T>& features, std::size_t batch) const {
  const auto h = stack_.forward(features, batch);
  if (spec_.kind == TaskKind::Classification) return out_.forward(segment_mean(h, batch));
  return out_.forward(h);
}

template <typename T>
void TaskHead<T>::collect(const std::string& prefix, std::vector<NamedTensor<T>>& out) const {
  stack_.collect(prefix + "stack.", out);
  out_.collect(prefix + "out", out);
}

// ---- Decoder ----

template <typename T>
Decoder<T>::Decoder(std::size_t in_width, std::size_t out_width, bool mask_token, const ModelDims& dims, Rng& rng)
    : in_(in_width, dims.d_tok, rng),
      stack_(stack_config(dims, dims.d_tok, dims.decoder_layers), rng),
      out_(dims.d_tok, out_width, rng) {
  if (mask_token) mask_token_ = normal_init<T>({1, dims.d_tok}, 0.02, rng);
}

template <typename T>
Tensor<T> Decoder<T>::forward(const Tensor<T>& encoded, const std::vector<std::vector<std::size_t>>& visible,
                              std::size_t count, const Tensor<T>& positions) const {
  const std::size_t batch = visible.size();
  if (batch == 0) throw ShapeError("decoder: empty batch");
  std::size_t supplied = 0;
  for (const auto& v : visible) supplied += v.size();
  if (encoded.rows() != supplied) {
    throw ShapeError("decoder: " + std::to_string(supplied) + " visible slots but " +
                     std::to_string(encoded.rows()) + " encoded rows");
  }
  auto h = in_.forward(encoded);
  if (supplied != batch * count) {
    if (!mask_token_.defined()) throw ShapeError("decoder without a mask token needs every slot supplied");
    const std::size_t mask_row = supplied;
    std::vector<std::size_t> idx(batch * count, mask_row);
    std::size_t row = 0;
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t slot : visible[b]) {
        if (slot >= count) throw ShapeError("decoder: visible slot out of range");
        idx[b * count + slot] = row++;
      }
    }
    const Tensor<T> parts[] = {h, mask_token_};
    h = gather_rows(concat_rows(std::span<const Tensor<T>>(parts)), std::span<const std::size_t>(idx));
  } else {
    for (const auto& v : visible) {
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i] != i) throw ShapeError("decoder: full input must list slots in order");
      }
    }
  }
  if (positions.defined()) h = add(h, positions);
  return out_.forward(stack_.forward(h, batch));
}

template <typename T>
void Decoder<T>::collect(const std::string& prefix, std::vector<NamedTensor<T>>& out) const {
  in_.collect(prefix + "in", out);
  if (mask_token_.defined()) out.push_back({prefix + "mask_token", mask_token_});
  stack_.collect(prefix + "stack.", out);
  out_.collect(prefix + "out", out);
}

// ---- ModelBundle ----

template <typename T>
ModelBundle<T>::ModelBundle(ModalityRegistry registry, ModelDims dims, std::uint64_t seed)
    : registry_(std::move(registry)), dims_(dims), seed_(seed) {
  dims_.validate();
  if (registry_.empty()) throw std::invalid_argument("model needs at least one modality");
  std::set<std::string> names;
  for (std::size_t m = 0; m < registry_.size(); ++m) {
    auto& spec = registry_[m];
    if (spec.name.empty() || spec.name.find_first_of("/.") != std::string::npos) {
      throw std::invalid_argument("modality name '" + spec.name + "' must be non-empty without '/' or '.'");
    }
    if (!names.insert(spec.name).second) throw std::invalid_argument("duplicate modality '" + spec.name + "'");
    if (spec.tokenizer.d_tok != dims_.d_tok) {
      throw std::invalid_argument("modality '" + spec.name + "' tokenizer width " +
                                  std::to_string(spec.tokenizer.d_tok) + " differs from d_tok " +
                                  std::to_string(dims_.d_tok));
    }
    std::set<std::string> task_names;
    for (std::size_t t = 0; t < spec.tasks.size(); ++t) {
      auto& task = spec.tasks[t];
      task.modality = m;
      task.task = t;
      if (task.name.empty() || task.name.find_first_of("/.") != std::string::npos) {
        throw std::invalid_argument("task name '" + task.name + "' must be non-empty without '/' or '.'");
      }
      if (!task_names.insert(task.name).second) throw std::invalid_argument("duplicate task '" + task.name + "'");
      if (task.arity() == 0) throw std::invalid_argument("task '" + task.name + "' has zero outputs");
      const bool consistent = (task.kind == TaskKind::Classification && task.loss == LossKind::CrossEntropy) ||
                              (task.kind == TaskKind::DensePrediction && task.loss == LossKind::L2);
      if (!consistent) throw std::invalid_argument("task '" + task.name + "' pairs its kind with the wrong loss");
    }
  }

  for (std::size_t m = 0; m < registry_.size(); ++m) {
    Rng rng = derive_rng(seed, {1, m});
    tokenizers_.push_back(make_tokenizer<T>(registry_[m].tokenizer, m, rng));
  }
  {
    Rng rng = derive_rng(seed, {2});
    f = FeatureTransform<T>(dims_, rng);
  }
  {
    Rng rng = derive_rng(seed, {3});
    a_mid = CrossAttention<T>(dims_.d_red, dims_.d_red, dims_.heads, dims_.ln_eps, rng);
  }
  {
    Rng rng = derive_rng(seed, {4});
    a_out = CrossAttention<T>(dims_.d_red, dims_.d_tok, dims_.heads, dims_.ln_eps, rng);
  }
  {
    Rng rng = derive_rng(seed, {5});
    g = TransformerStack<T>(stack_config(dims_, dims_.d_red, dims_.g_layers), rng);
  }
  for (std::size_t m = 0; m < registry_.size(); ++m) {
    for (std::size_t t = 0; t < registry_[m].tasks.size(); ++t) {
      Rng rng = derive_rng(seed, {6, m, t});
      heads_.emplace(std::pair{m, t}, TaskHead<T>(registry_[m].tasks[t], dims_, rng));
    }
  }
}

template <typename T>
const Tokenizer<T>& ModelBundle<T>::tokenizer(std::size_t modality) const {
  if (modality >= tokenizers_.size()) throw std::out_of_range("unregistered modality " + std::to_string(modality));
  return *tokenizers_[modality];
}

template <typename T>
Tokenizer<T>& ModelBundle<T>::tokenizer(std::size_t modality) {
  if (modality >= tokenizers_.size()) throw std::out_of_range("unregistered modality " + std::to_string(modality));
  return *tokenizers_[modality];
}

template <typename T>
const TaskSpec& ModelBundle<T>::task(std::size_t modality, std::size_t task) const {
  if (modality >= registry_.size() || task >= registry_[modality].tasks.size()) {
    throw std::invalid_argument("unregistered task (" + std::to_string(modality) + ", " + std::to_string(task) + ")");
  }
  return registry_[modality].tasks[task];
}

template <typename T>
const TaskHead<T>& ModelBundle<T>::head(const TaskSpec& t) const {
  const auto it = heads_.find({t.modality, t.task});
  if (it == heads_.end() || it->second.spec().name != t.name) {
    throw std::invalid_argument("unregistered task '" + t.name + "' on modality " + std::to_string(t.modality));
  }
  return it->second;
}

template <typename T>
void ModelBundle<T>::add_decoders(int stage) {
  if (stage != 1 && stage != 2) throw std::invalid_argument("decoders exist for stages 1 and 2 only");
  const std::size_t in_width = stage == 1 ? dims_.d_tok : dims_.d_red;
  for (std::size_t m = 0; m < registry_.size(); ++m) {
    const auto& tc = registry_[m].tokenizer;
    Rng rng = derive_rng(seed_, {7, std::uint64_t(stage), m});
    const bool symbolic = tc.symbolic();
    const std::size_t out_width = symbolic ? tc.vocab : tc.raw_width();
    decoders_.insert_or_assign(std::pair{stage, m}, Decoder<T>(in_width, out_width, !symbolic, dims_, rng));
  }
}

template <typename T>
const Decoder<T>& ModelBundle<T>::decoder(int stage, std::size_t modality) const {
  const auto it = decoders_.find({stage, modality});
  if (it == decoders_.end()) {
    throw std::logic_error("no stage-" + std::to_string(stage) + " decoder for modality " + std::to_string(modality));
  }
  return it->second;
}

template <typename T>
bool ModelBundle<T>::has_decoders(int stage) const {
  for (const auto& [key, d] : decoders_) {
    if (key.first == stage) return true;
  }
  return false;
}

template <typename T>
void ModelBundle<T>::discard_decoders(int stage) {
  std::erase_if(decoders_, [stage](const auto& kv) { return kv.first.first == stage; });
}

template <typename T>
std::vector<NamedTensor<T>> ModelBundle<T>::parameters() const {
  std::vector<NamedTensor<T>> out;
  for (std::size_t m = 0; m < registry_.size(); ++m) tokenizers_[m]->collect(tokenizer_group(registry_[m]) + "/", out);
  f.collect("f.stack/", "f.fc/", out);
  a_mid.collect("a_mid/", out);
  a_out.collect("a_out/", out);
  g.collect("g/", out);
  for (const auto& [key, h] : heads_) h.collect(head_group(registry_[key.first], h.spec()) + "/", out);
  for (const auto& [key, d] : decoders_) d.collect(decoder_group(key.first, registry_[key.second]) + "/", out);
  return out;
}

template <typename T>
std::vector<NamedTensor<T>> ModelBundle<T>::parameters(const std::function<bool(std::string_view)>& keep) const {
  std::vector<NamedTensor<T>> out;
  for (auto& p : parameters()) {
    const auto slash = p.name.find('/');
    if (keep(std::string_view(p.name).substr(0, slash))) out.push_back(std::move(p));
  }
  return out;
}

template <typename T>
std::uint64_t ModelBundle<T>::checksum() const {
  std::uint64_t h = 14695981039346656037ull;
  auto mix = [&h](const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 1099511628211ull;
    }
  };
  for (const auto& p : parameters()) {
    if (p.name.rfind("dec", 0) == 0) continue;
    mix(p.name.data(), p.name.size());
    const auto v = p.tensor.values();
    mix(v.data(), v.size_bytes());
  }
  return h;
}

// ---- forward paths ----

template <typename T>
Tensor<T> f_transform(const ModelBundle<T>& bundle, const TokenSequence<T>& x) {
  const auto d_tok = bundle.dims().d_tok;
  if (!x.tokens.defined() || x.tokens.rank() != 2 || x.tokens.cols() != d_tok) {
    throw ShapeError("f expects tokens of width " + std::to_string(d_tok) + ", got " +
                     (x.tokens.defined() ? shape_string(x.tokens.shape()) : std::string("none")));
  }
  if (x.tokens.rows() != x.rows()) throw ShapeError("token rows disagree with batch * count");
  const auto in = x.positions.defined() ? add(x.tokens, x.positions) : x.tokens;
  return bundle.f.reduce(bundle.f.encode(in, x.batch));
}

template <typename T>
Tensor<T> cross_attend(const Tensor<T>& query, const Tensor<T>& kv, const CrossAttention<T>& params,
                       std::size_t batch, std::vector<T>* weights) {
  return params.forward(query, kv, batch, weights);
}

template <typename T>
PairTrunk<T> forward_trunk(const ModelBundle<T>& bundle, const TokenSequence<T>& x_i, const TokenSequence<T>& x_j,
                           bool fuse_out) {
  if (x_i.batch != x_j.batch) {
    throw ShapeError("two-stream batches differ: " + std::to_string(x_i.batch) + " vs " + std::to_string(x_j.batch));
  }
  PairTrunk<T> tr;
  tr.batch = x_i.batch;
  tr.count_i = x_i.count;
  tr.count_j = x_j.count;
  tr.u_i = f_transform(bundle, x_i);
  tr.u_j = f_transform(bundle, x_j);
  const auto mid_i = bundle.a_mid.forward(tr.u_i, tr.u_j, tr.batch);
  const auto mid_j = bundle.a_mid.forward(tr.u_j, tr.u_i, tr.batch);
  const Tensor<T> parts[] = {mid_i, mid_j};
  const auto order = interleave_rows(tr.batch, tr.count_i, tr.count_j);
  tr.fused = gather_rows(concat_rows(std::span<const Tensor<T>>(parts)), std::span<const std::size_t>(order));
  tr.xhat = bundle.g.forward(tr.fused, tr.batch);

  const std::size_t per = tr.count_i + tr.count_j;
  std::vector<std::size_t> rows_i, rows_j;
  rows_i.reserve(tr.batch * tr.count_i);
  rows_j.reserve(tr.batch * tr.count_j);
  for (std::size_t b = 0; b < tr.batch; ++b) {
    for (std::size_t t = 0; t < tr.count_i; ++t) rows_i.push_back(b * per + t);
    for (std::size_t t = 0; t < tr.count_j; ++t) rows_j.push_back(b * per + tr.count_i + t);
  }
  tr.xhat_i = gather_rows(tr.xhat, std::span<const std::size_t>(rows_i));
  tr.xhat_j = gather_rows(tr.xhat, std::span<const std::size_t>(rows_j));
  if (!fuse_out) {
    tr.out_i = tr.xhat_i;
    tr.out_j = tr.xhat_j;
    return tr;
  }
  tr.out_i = bundle.a_out.forward(tr.xhat_i, x_i.tokens, tr.batch);
  tr.out_j = bundle.a_out.forward(tr.xhat_j, x_j.tokens, tr.batch);
  return tr;
}

template <typename T>
PairPrediction<T> forward_pair(const ModelBundle<T>& bundle, const TokenSequence<T>& x_i,
                               const TokenSequence<T>& x_j, const TaskSpec& q, const TaskSpec& r, bool fuse_out) {
  if (q.modality != x_i.modality || r.modality != x_j.modality) {
    throw std::invalid_argument("task modalities do not match the input streams");
  }
  const auto& hq = bundle.head(q);
  const auto& hr = bundle.head(r);
  PairPrediction<T> out;
  out.trunk = forward_trunk(bundle, x_i, x_j, fuse_out);
  out.pred_q = hq.forward(out.trunk.out_i, out.trunk.batch);
  out.pred_r = hr.forward(out.trunk.out_j, out.trunk.batch);
  return out;
}

template <typename T>
Tensor<T> backbone(const ModelBundle<T>& bundle, const TokenSequence<T>& x) {
  return bundle.g.forward(f_transform(bundle, x), x.batch);
}

template <typename T>
Tensor<T> head_forward(const ModelBundle<T>& bundle, const Tensor<T>& features, const TaskSpec& t, std::size_t batch) {
  if (features.rank() != 2 || features.cols() != bundle.dims().d_red) {
    throw ShapeError("head expects features of width " + std::to_string(bundle.dims().d_red) + ", got " +
                     shape_string(features.shape()));
  }
  return bundle.head(t).forward(features, batch);
}

template <typename T>
Tensor<T> forward_inference(const ModelBundle<T>& bundle, const TokenSequence<T>& x, const TaskSpec& t) {
  if (t.modality != x.modality) {
    throw std::invalid_argument("task '" + t.name + "' belongs to modality " + std::to_string(t.modality) +
                                ", input is modality " + std::to_string(x.modality));
  }
  const auto& h = bundle.head(t);
  return h.forward(backbone(bundle, x), x.batch);
}

template <typename T>
Tensor<T> embed(const ModelBundle<T>& bundle, const TokenSequence<T>& x) {
  return segment_mean(backbone(bundle, x), x.batch);
}

#define OW_INSTANTIATE_MODEL(T)                                                                                  \
  template class FeatureTransform<T>;                                                                            \
  template class TaskHead<T>;                                                                                    \
  template class Decoder<T>;                                                                                     \
  template class ModelBundle<T>;                                                                                 \
  template Tensor<T> f_transform(const ModelBundle<T>&, const TokenSequence<T>&);                                \
  template Tensor<T> cross_attend(const Tensor<T>&, const Tensor<T>&, const CrossAttention<T>&, std::size_t,     \
                                  std::vector<T>*);                                                              \
  template PairTrunk<T> forward_trunk(const ModelBundle<T>&, const TokenSequence<T>&, const TokenSequence<T>&,    \
                                    bool);                                                                       \
  template PairPrediction<T> forward_pair(const ModelBundle<T>&, const TokenSequence<T>&,                        \
                                          const TokenSequence<T>&, const TaskSpec&, const TaskSpec&, bool);      \
  template Tensor<T> backbone(const ModelBundle<T>&, const TokenSequence<T>&);                                   \
  template Tensor<T> head_forward(const ModelBundle<T>&, const Tensor<T>&, const TaskSpec&, std::size_t);        \
  template Tensor<T> forward_inference(const ModelBundle<T>&, const TokenSequence<T>&, const TaskSpec&);         \
  template Tensor<T> embed(const ModelBundle<T>&, const TokenSequence<T>&);

OW_INSTANTIATE_MODEL(float)
OW_INSTANTIATE_MODEL(double)

}  // namespace ow
