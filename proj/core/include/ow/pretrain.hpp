#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ow/data.hpp"
#include "ow/metrics.hpp"
#include "ow/model.hpp"
#include "ow/optim.hpp"
#include "ow/registry.hpp"

namespace ow {

/// What happens to a token selected for prediction in a symbol sequence.
enum class Corruption : std::uint8_t { Mask, Random, Keep };

/// round(ratio * n) with halves rounded away from zero, clamped to [1, n-1]
/// when 0 < ratio < 1. Throws std::invalid_argument unless 0 <= ratio < 1.
std::size_t mask_count(std::size_t n, double ratio);

struct CorruptionSplit {
  std::size_t mask = 0;
  std::size_t random = 0;
  std::size_t keep = 0;
};

/// 8:1:1 split: keep = round(0.1 s), random = round(0.1 s), mask gets the rest.
CorruptionSplit corruption_split(std::size_t selected);

struct MaskPlan {
  std::size_t count = 0;
  std::vector<std::size_t> masked;   // sorted
  std::vector<std::size_t> visible;  // sorted complement
  std::vector<Corruption> corruption;  // parallel to `masked`, sequence family only
};

/// Uniform random subset of mask_count(n, ratio) positions. For the sequence
/// family the selected positions also get 8:1:1 corruption labels.
MaskPlan plan_mask(std::size_t n, double ratio, Family family, Rng& rng);

/// Prediction fraction f for symbol sequences, the family ratio otherwise.
double mask_ratio(const TokenizerConfig& tokenizer, const MaskingConfig& masking);

/// Parameter-free description of one masked batch. Token tensors are rebuilt
/// from it on every loss evaluation so the loss is a pure function of the
/// parameters.
template <typename T>
struct MaskedBatch {
  std::size_t modality = 0;
  std::size_t count = 0;
  bool symbolic = false;
  std::vector<const Sample*> samples;
  std::vector<MaskPlan> plans;
  std::vector<std::vector<int>> corrupted;  // symbolic: encoder input ids
  Tensor<T> targets;                        // continuous: normalized raw tokens, [batch*count x raw_width]
  std::vector<int> target_ids;              // symbolic: original ids, batch*count
  std::vector<std::size_t> target_rows;     // scored rows, sample-major

  std::size_t batch() const noexcept { return samples.size(); }
};

template <typename T>
MaskedBatch<T> prepare_masked(const ModelBundle<T>& bundle, std::size_t modality,
                              std::span<const Sample* const> samples, const MaskingConfig& masking, Rng& rng);

/// Encoder view of a masked batch: visible tokens (continuous) or the
/// corrupted full sequence (symbolic), plus the full-length positions.
template <typename T>
struct EncoderView {
  TokenSequence<T> seq;
  Tensor<T> positions;
  std::vector<std::vector<std::size_t>> visible;
};

template <typename T>
EncoderView<T> encoder_view(const ModelBundle<T>& bundle, const MaskedBatch<T>& masked);

/// l2 on masked rows (continuous) or cross-entropy at prediction rows (symbolic).
template <typename T>
Tensor<T> reconstruction_loss(const Tensor<T>& pred, const MaskedBatch<T>& masked);

/// f's transformer over the encoder view, then the stage-1 decoder.
template <typename T>
Tensor<T> stage1_loss(const ModelBundle<T>& bundle, const MaskedBatch<T>& masked);

template <typename T>
struct Stage2Loss {
  Tensor<T> loss_i;
  Tensor<T> loss_j;
  Tensor<T> total;  // loss_i + loss_j
};

/// Two-stream trunk over both encoder views, each A_out output decoded by its
/// modality's stage-2 decoder.
template <typename T>
Stage2Loss<T> stage2_loss(const ModelBundle<T>& bundle, const MaskedBatch<T>& masked_i,
                          const MaskedBatch<T>& masked_j);

template <typename T>
std::vector<NamedTensor<T>> stage1_parameters(const ModelBundle<T>& bundle, std::size_t modality);
template <typename T>
std::vector<NamedTensor<T>> stage2_parameters(const ModelBundle<T>& bundle, std::size_t i, std::size_t j);

/// One optimizer step on a single-modality batch. Returns the loss.
template <typename T>
double stage1_step(ModelBundle<T>& bundle, std::size_t modality, std::span<const Sample* const> samples,
                   const MaskingConfig& masking, Optimizer<T>& opt, Rng& rng);

/// One optimizer step on two distinct modalities. Returns (loss_i, loss_j).
template <typename T>
std::pair<double, double> stage2_step(ModelBundle<T>& bundle, std::size_t i, std::span<const Sample* const> batch_i,
                                      std::size_t j, std::span<const Sample* const> batch_j,
                                      const MaskingConfig& masking, Optimizer<T>& opt, Rng& rng);

struct Stage1Config {
  std::size_t epochs = 50;
  std::size_t batch = 16;
  std::size_t batches_per_visit = 0;  // 0 = a full pass over the train split
  OptimizerConfig optimizer{};
};

struct Stage2Config {
  std::size_t steps = 600;
  std::size_t batch = 16;
  OptimizerConfig optimizer{};
};

struct StageLogEntry {
  std::size_t step = 0;
  std::size_t modality_i = 0;
  std::size_t modality_j = 0;  // stage 2 only
  double loss = 0;             // stage 2: loss_i + loss_j
  double loss_i = 0;
  double loss_j = 0;
};

/// Round-robin over modalities each epoch; decoders are created first and
/// discarded at the end. `datasets[m]` feeds modality m.
template <typename T>
std::vector<StageLogEntry> stage1_loop(ModelBundle<T>& bundle, std::span<const SyntheticDataset> datasets,
                                       const MaskingConfig& masking, const Stage1Config& cfg, std::uint64_t seed,
                                       MetricsWriter* metrics = nullptr);

/// Each step draws a uniform unordered modality pair and B/2 unpaired samples
/// of each; decoders are discarded at the end.
template <typename T>
std::vector<StageLogEntry> stage2_loop(ModelBundle<T>& bundle, std::span<const SyntheticDataset> datasets,
                                       const MaskingConfig& masking, const Stage2Config& cfg, std::uint64_t seed,
                                       MetricsWriter* metrics = nullptr);

/// Uniform unordered pair i < j of [0, m).
std::pair<std::size_t, std::size_t> sample_modality_pair(std::size_t m, Rng& rng);

}  // namespace ow
