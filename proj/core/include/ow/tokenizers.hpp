#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ow/data.hpp"
#include "ow/registry.hpp"
#include "ow/tensor.hpp"

namespace ow {

/// Tokenized form of a batch of samples from one modality. Rows are laid out
/// sample-major: rows [b*count, (b+1)*count) belong to sample b.
template <typename T>
struct TokenSequence {
  Tensor<T> tokens;     // [batch*count x d_tok]
  Tensor<T> positions;  // [batch*count x d_tok], additive
  std::size_t modality = 0;
  std::size_t batch = 1;
  std::size_t count = 0;
  std::vector<bool> mask;  // empty, or batch*count flags (true = masked)
  Tensor<T> targets;       // optional reconstruction targets, one row per masked token

  std::size_t rows() const { return batch * count; }
  std::size_t width() const { return tokens.defined() ? tokens.cols() : 0; }
  /// Throws ShapeError if the layout invariants do not hold.
  void validate() const;
};

/// 1-D sinusoidal encoding, [positions x width].
std::vector<double> sinusoid_table(std::size_t positions, std::size_t width);
/// 2-D encoding: first half of the width encodes the row, second half the column.
std::vector<double> sinusoid_grid(std::size_t rows, std::size_t cols, std::size_t width);

/// Farthest-point sampling. The first centroid is point 0; each next centroid
/// maximizes the distance to the chosen set, ties going to the lowest index.
/// `points` is N x stride with xyz in the first three columns.
std::vector<std::size_t> farthest_point_sample(std::span<const float> points, std::size_t stride,
                                               std::size_t count);
/// The k nearest points to `center` (including itself), nearest first, ties by index.
std::vector<std::size_t> nearest_neighbors(std::span<const float> points, std::size_t stride, std::size_t center,
                                           std::size_t k);

/// Modality-specific map from raw samples to tokens. Learnable projections
/// are exposed through `parameters()`.
template <typename T>
class Tokenizer {
 public:
  Tokenizer(TokenizerConfig config, std::size_t modality) : config_(std::move(config)), modality_(modality) {}
  virtual ~Tokenizer() = default;

  const TokenizerConfig& config() const noexcept { return config_; }
  std::size_t modality() const noexcept { return modality_; }
  std::size_t token_count() const { return config_.token_count(); }

  virtual TokenSequence<T> tokenize(std::span<const Sample* const> samples) const = 0;
  TokenSequence<T> tokenize(const Sample& sample) const;

  /// Normalized raw tokens, [batch*count x raw_width]; the regression target
  /// of masked pretraining. Throws for families without continuous targets.
  virtual Tensor<T> raw_tokens(std::span<const Sample* const> samples) const;

  virtual void collect(const std::string& prefix, std::vector<NamedTensor<T>>& out) const = 0;
  std::vector<NamedTensor<T>> parameters(const std::string& prefix) const;

 protected:
  void check_batch(std::span<const Sample* const> samples) const;

  TokenizerConfig config_;
  std::size_t modality_;
};

/// Patches of a per-sample z-scored H x W x C grid, linearly projected, with
/// 2-D sinusoidal positions.
template <typename T>
class GridTokenizer final : public Tokenizer<T> {
 public:
  GridTokenizer(TokenizerConfig config, std::size_t modality, Rng& rng);

  TokenSequence<T> tokenize(std::span<const Sample* const> samples) const override;
  using Tokenizer<T>::tokenize;
  Tensor<T> raw_tokens(std::span<const Sample* const> samples) const override;
  void collect(const std::string& prefix, std::vector<NamedTensor<T>>& out) const override;

 private:
  Tensor<T> weight_;  // [patch_dim x d_tok]
  Tensor<T> bias_;    // [d_tok]
  std::vector<T> positions_;
};

/// Symbol ids through an embedding table (row `vocab` is the mask symbol), or a
/// z-scored real series cut into windows and projected. 1-D sinusoidal positions.
template <typename T>
class SequenceTokenizer final : public Tokenizer<T> {
 public:
  SequenceTokenizer(TokenizerConfig config, std::size_t modality, Rng& rng);

  TokenSequence<T> tokenize(std::span<const Sample* const> samples) const override;
  using Tokenizer<T>::tokenize;
  Tensor<T> raw_tokens(std::span<const Sample* const> samples) const override;
  void collect(const std::string& prefix, std::vector<NamedTensor<T>>& out) const override;

  /// Embeds explicit id rows (e.g. corrupted copies); each row must have `length` ids.
  TokenSequence<T> embed_symbols(std::span<const std::vector<int>> ids) const;
  int mask_symbol() const { return int(this->config_.vocab); }

 private:
  Tensor<T> weight_;  // embedding [(vocab+1) x d_tok] or projection [window x d_tok]
  Tensor<T> bias_;    // real series only
  std::vector<T> positions_;
};

/// Farthest-point centroids, kNN groups recentered on their centroid and
/// projected; the centroid coordinates are projected into the position term.
template <typename T>
class SetTokenizer final : public Tokenizer<T> {
 public:
  SetTokenizer(TokenizerConfig config, std::size_t modality, Rng& rng);

  TokenSequence<T> tokenize(std::span<const Sample* const> samples) const override;
  using Tokenizer<T>::tokenize;
  Tensor<T> raw_tokens(std::span<const Sample* const> samples) const override;
  void collect(const std::string& prefix, std::vector<NamedTensor<T>>& out) const override;

 private:
  struct Groups {
    std::vector<T> members;    // [groups x group_size*(3+F)], z-scored
    std::vector<T> centroids;  // [groups x 3]
  };
  Groups group(const Sample& sample) const;

  Tensor<T> weight_;      // [group_size*(3+F) x d_tok]
  Tensor<T> bias_;        // [d_tok]
  Tensor<T> pos_weight_;  // [3 x d_tok]
  Tensor<T> pos_bias_;    // [d_tok]
};

/// One token per field: standardized numeric value times a per-field vector
/// plus a per-field bias, or a per-field categorical embedding. Field index is
/// the position.
template <typename T>
class TableTokenizer final : public Tokenizer<T> {
 public:
  TableTokenizer(TokenizerConfig config, std::size_t modality, Rng& rng);

  /// Stores per-field mean / std of the numeric fields.
  void fit(std::span<const Sample> training);
  const std::vector<double>& means() const noexcept { return means_; }
  const std::vector<double>& stddevs() const noexcept { return stddevs_; }

  TokenSequence<T> tokenize(std::span<const Sample* const> samples) const override;
  using Tokenizer<T>::tokenize;
  void collect(const std::string& prefix, std::vector<NamedTensor<T>>& out) const override;

 private:
  Tensor<T> numeric_weight_;  // [fields x d_tok], rows of categorical fields unused
  Tensor<T> table_;           // [fields + sum(cardinality) x d_tok]: numeric biases, then categories
  std::vector<std::size_t> category_offset_;
  std::vector<double> means_;
  std::vector<double> stddevs_;
  std::vector<T> positions_;
};

template <typename T>
std::unique_ptr<Tokenizer<T>> make_tokenizer(const TokenizerConfig& config, std::size_t modality, Rng& rng);

/// "OWTK" dump: magic, u32 version, u32 rows, u32 width, rows*width little-endian f32.
inline constexpr std::uint32_t kTokenDumpVersion = 1;

struct TokenDump {
  std::size_t rows = 0;
  std::size_t width = 0;
  std::vector<float> values;
};

void write_token_dump(std::ostream& out, std::size_t rows, std::size_t width, std::span<const float> values);
/// Throws CheckpointError on a bad magic, version or truncated payload.
TokenDump read_token_dump(std::istream& in);

template <typename T>
void write_tokens(std::ostream& out, const Tensor<T>& tokens);

extern template class Tokenizer<float>;
extern template class Tokenizer<double>;
extern template class GridTokenizer<float>;
extern template class GridTokenizer<double>;
extern template class SequenceTokenizer<float>;
extern template class SequenceTokenizer<double>;
extern template class SetTokenizer<float>;
extern template class SetTokenizer<double>;
extern template class TableTokenizer<float>;
extern template class TableTokenizer<double>;

}  // namespace ow
