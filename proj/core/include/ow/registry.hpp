#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace ow {

using Rng = std::mt19937_64;

/// Independent stream for (seed, a, b, ...). Used wherever a worker or a step
/// needs its own generator that does not depend on what ran before it.
Rng derive_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> stream);

/// Structural modality families. Images, depth, spectrograms and
/// hyperspectral cubes are grids; text, time series and IMU are sequences;
/// point clouds are sets; tabular rows are tables.
enum class Family { Grid, Sequence, Set, Table };

std::string_view family_name(Family family);
/// Throws std::invalid_argument on an unknown name.
Family parse_family(std::string_view name);

enum class TaskKind { Classification, DensePrediction };
enum class LossKind { CrossEntropy, L2 };

/// One supervised problem on one modality.
struct TaskSpec {
  std::size_t modality = 0;
  std::size_t task = 0;
  std::string name;
  TaskKind kind = TaskKind::Classification;
  std::size_t classes = 0;       // classification
  std::size_t output_width = 0;  // dense prediction, per token
  LossKind loss = LossKind::CrossEntropy;

  static TaskSpec classification(std::string name, std::size_t classes);
  static TaskSpec dense(std::string name, std::size_t output_width);

  /// Number of outputs per sample (classification) or per token (dense).
  std::size_t arity() const { return kind == TaskKind::Classification ? classes : output_width; }
};

struct TableField {
  bool categorical = false;
  std::size_t cardinality = 0;
};

struct TokenizerConfig {
  Family family = Family::Grid;
  std::size_t d_tok = 32;

  // grid: height x width x channels, square patches
  std::size_t height = 16;
  std::size_t width = 16;
  std::size_t channels = 1;
  std::size_t patch = 4;

  // sequence: symbolic when vocab > 0, otherwise a real series cut into windows
  std::size_t length = 16;
  std::size_t vocab = 0;
  std::size_t window = 1;

  // set: points x (3 + point_features), grouped by farthest-point sampling + kNN
  std::size_t points = 64;
  std::size_t point_features = 0;
  std::size_t groups = 8;
  std::size_t group_size = 8;

  // table
  std::vector<TableField> fields;

  /// Throws std::invalid_argument describing the first violated constraint.
  void validate() const;
  std::size_t token_count() const;
  /// Width of one raw token before projection (patch, window, group or 1).
  std::size_t raw_width() const;
  bool symbolic() const { return family == Family::Sequence && vocab > 0; }
};

struct ModalitySpec {
  std::string name;
  TokenizerConfig tokenizer;
  std::vector<TaskSpec> tasks;
};

using ModalityRegistry = std::vector<ModalitySpec>;

/// Mask ratios per family plus the prediction fraction for symbol sequences.
struct MaskingConfig {
  double grid = 0.95;
  double sequence = 0.95;
  double set = 0.90;
  double table = 0.95;
  double fraction_f = 0.05;

  double ratio(Family family) const;
};

}  // namespace ow
