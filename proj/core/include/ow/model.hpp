#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ow/layers.hpp"
#include "ow/registry.hpp"
#include "ow/tensor.hpp"
#include "ow/tokenizers.hpp"

namespace ow {

struct ModelDims {
  std::size_t d_tok = 32;
  std::size_t d_red = 16;
  std::size_t heads = 2;
  std::size_t f_layers = 2;
  std::size_t g_layers = 2;
  std::size_t head_layers = 2;
  std::size_t decoder_layers = 2;
  std::size_t mlp_ratio = 2;
  double ln_eps = 1e-5;

  /// Throws std::invalid_argument on the first violated constraint.
  void validate() const;
};

/// f: transformer over tokens + positions, then a per-token FC reduction
/// d_tok -> d_tok -> d_red -> d_red with ReLU between layers.
template <typename T>
class FeatureTransform {
 public:
  FeatureTransform() = default;
  FeatureTransform(const ModelDims& dims, Rng& rng);

  /// Transformer part only; the stage-1 encoder.
  Tensor<T> encode(const Tensor<T>& x, std::size_t batch) const;
  /// FC reduction of encoded tokens.
  Tensor<T> reduce(const Tensor<T>& h) const;

  void collect(const std::string& stack_prefix, const std::string& fc_prefix,
               std::vector<NamedTensor<T>>& out) const;

 private:
  TransformerStack<T> stack_;
  Linear<T> fc1_, fc2_, fc3_;
};

/// h_mt: small transformer over d_red features, then mean-pool + linear to K
/// logits (classification) or a per-token linear (dense prediction).
template <typename T>
class TaskHead {
 public:
  TaskHead() = default;
  TaskHead(const TaskSpec& spec, const ModelDims& dims, Rng& rng);

  /// features [batch*n x d_red] -> [batch x K] or [batch*n x output_width].
  Tensor<T> forward(const Tensor<T>& features, std::size_t batch) const;
  void collect(const std::string& prefix, std::vector<NamedTensor<T>>& out) const;
  const TaskSpec& spec() const noexcept { return spec_; }

 private:
  TaskSpec spec_;
  TransformerStack<T> stack_;
  Linear<T> out_;
};

/// Masked-token decoder: input projection to d_tok, a learnable mask token
/// scattered into the masked slots, positions added, a small transformer and
/// a linear read-out to the reconstruction width.
template <typename T>
class Decoder {
 public:
  Decoder() = default;
  /// Without `mask_token` every slot must be supplied (symbol sequences, where
  /// the encoder already saw a corrupted full-length input).
  Decoder(std::size_t in_width, std::size_t out_width, bool mask_token, const ModelDims& dims, Rng& rng);

  /// `encoded` holds the supplied rows of each sample in order; `visible[b]`
  /// lists their sorted slot indices in [0, count). `positions` is
  /// [batch*count x d_tok] or undefined. Returns [batch*count x out_width].
  Tensor<T> forward(const Tensor<T>& encoded, const std::vector<std::vector<std::size_t>>& visible,
                    std::size_t count, const Tensor<T>& positions) const;
  void collect(const std::string& prefix, std::vector<NamedTensor<T>>& out) const;

  std::size_t out_width() const { return out_.out_features(); }

 private:
  Linear<T> in_;
  Tensor<T> mask_token_;  // [1 x d_tok], undefined when unused
  TransformerStack<T> stack_;
  Linear<T> out_;
};

/// Every learnable parameter of the network: tokenizers, f, the two cross
/// attention sets, g, one head per registered task and, while a pretraining
/// stage runs, its decoders.
///
/// Parameter names are "<group>/<path>" with groups tok.<modality>, f.stack,
/// f.fc, a_mid, a_out, g, head.<modality>.<task>, dec1.<modality> and
/// dec2.<modality>.
template <typename T>
class ModelBundle {
 public:
  ModelBundle(ModalityRegistry registry, ModelDims dims, std::uint64_t seed);

  ModelBundle(const ModelBundle&) = delete;
  ModelBundle& operator=(const ModelBundle&) = delete;
  ModelBundle(ModelBundle&&) noexcept = default;
  ModelBundle& operator=(ModelBundle&&) noexcept = default;

  const ModelDims& dims() const noexcept { return dims_; }
  const ModalityRegistry& registry() const noexcept { return registry_; }
  std::size_t modalities() const noexcept { return registry_.size(); }
  std::uint64_t seed() const noexcept { return seed_; }

  const Tokenizer<T>& tokenizer(std::size_t modality) const;
  Tokenizer<T>& tokenizer(std::size_t modality);

  FeatureTransform<T> f;
  CrossAttention<T> a_mid;
  CrossAttention<T> a_out;
  TransformerStack<T> g;

  /// Throws std::invalid_argument for an unregistered (modality, task).
  const TaskHead<T>& head(const TaskSpec& task) const;
  const TaskSpec& task(std::size_t modality, std::size_t task) const;

  /// Creates fresh decoders for every modality (stage 1: input d_tok, stage 2: input d_red).
  void add_decoders(int stage);
  /// Throws std::logic_error when the decoder does not exist.
  const Decoder<T>& decoder(int stage, std::size_t modality) const;
  bool has_decoders(int stage) const;
  void discard_decoders(int stage);

  /// All parameters in a fixed order.
  std::vector<NamedTensor<T>> parameters() const;
  /// Parameters whose group satisfies `keep`.
  std::vector<NamedTensor<T>> parameters(const std::function<bool(std::string_view group)>& keep) const;

  /// FNV-1a over parameter names and value bytes, decoders excluded.
  std::uint64_t checksum() const;

  static std::string tokenizer_group(const ModalitySpec& m) { return "tok." + m.name; }
  static std::string head_group(const ModalitySpec& m, const TaskSpec& t) { return "head." + m.name + "." + t.name; }
  static std::string decoder_group(int stage, const ModalitySpec& m) {
    return "dec" + std::to_string(stage) + "." + m.name;
  }

 private:
  ModalityRegistry registry_;
  ModelDims dims_;
  std::uint64_t seed_;
  std::vector<std::unique_ptr<Tokenizer<T>>> tokenizers_;
  std::map<std::pair<std::size_t, std::size_t>, TaskHead<T>> heads_;
  std::map<std::pair<int, std::size_t>, Decoder<T>> decoders_;
};

/// u = f(x): width-checked, positions added before the transformer.
template <typename T>
Tensor<T> f_transform(const ModelBundle<T>& bundle, const TokenSequence<T>& x);

/// Cross attention with an explicit parameter set; query shape is preserved.
template <typename T>
Tensor<T> cross_attend(const Tensor<T>& query, const Tensor<T>& kv, const CrossAttention<T>& params,
                       std::size_t batch, std::vector<T>* weights = nullptr);

/// Intermediate tensors of the two-stream trunk.
template <typename T>
struct PairTrunk {
  Tensor<T> u_i, u_j;        // f outputs
  Tensor<T> fused;           // per sample: A_mid(u_i, u_j) rows then A_mid(u_j, u_i) rows
  Tensor<T> xhat;            // g(fused)
  Tensor<T> xhat_i, xhat_j;  // split back by token count
  Tensor<T> out_i, out_j;    // A_out(xhat_i, x_i.tokens), A_out(xhat_j, x_j.tokens)
  std::size_t batch = 0, count_i = 0, count_j = 0;
};

/// f, A_mid both ways, g over the per-sample concatenation, split, A_out.
/// Both sequences must hold the same number of samples. With `fuse_out`
/// false, A_out is skipped and out_i / out_j are the xhat halves.
template <typename T>
PairTrunk<T> forward_trunk(const ModelBundle<T>& bundle, const TokenSequence<T>& x_i, const TokenSequence<T>& x_j,
                           bool fuse_out = true);

template <typename T>
struct PairPrediction {
  Tensor<T> pred_q, pred_r;
  PairTrunk<T> trunk;
};

/// Training-time two-stream forward: head_q(A_out(xhat_i, x_i)), head_r(A_out(xhat_j, x_j)).
template <typename T>
PairPrediction<T> forward_pair(const ModelBundle<T>& bundle, const TokenSequence<T>& x_i,
                               const TokenSequence<T>& x_j, const TaskSpec& q, const TaskSpec& r, bool fuse_out = true);

/// g(f(x)).
template <typename T>
Tensor<T> backbone(const ModelBundle<T>& bundle, const TokenSequence<T>& x);

template <typename T>
Tensor<T> head_forward(const ModelBundle<T>& bundle, const Tensor<T>& features, const TaskSpec& t,
                       std::size_t batch);

/// Single-stream inference h_t(g(f(x))); the cross attention sets are not used.
template <typename T>
Tensor<T> forward_inference(const ModelBundle<T>& bundle, const TokenSequence<T>& x, const TaskSpec& t);

/// Mean-pooled g(f(x)), [batch x d_red].
template <typename T>
Tensor<T> embed(const ModelBundle<T>& bundle, const TokenSequence<T>& x);

/// Row indices that interleave two sample-major blocks per sample:
/// [a_0, b_0, a_1, b_1, ...] where a has `count_a` rows per sample and
/// b follows a in the concatenated source.
std::vector<std::size_t> interleave_rows(std::size_t batch, std::size_t count_a, std::size_t count_b);

extern template class FeatureTransform<float>;
extern template class FeatureTransform<double>;
extern template class TaskHead<float>;
extern template class TaskHead<double>;
extern template class Decoder<float>;
extern template class Decoder<double>;
extern template class ModelBundle<float>;
extern template class ModelBundle<double>;

}  // namespace ow
