#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ow/registry.hpp"

namespace ow {

/// Supervision for one task on one sample: a class id, or one row of
/// `output_width` values per token for dense tasks.
struct TaskTarget {
  int label = -1;
  std::vector<float> dense;
};

/// Raw sample. `values` holds grids (H x W x C, row-major), real series,
/// point clouds (N x (3+F)) and table rows; `symbols` holds symbol ids.
struct Sample {
  std::vector<float> values;
  std::vector<int> symbols;
  std::vector<TaskTarget> targets;  // parallel to the dataset's task list
};

enum class Split { Train, Test };

/// Samples [0, split) are train, [split, size) are test.
struct SyntheticDataset {
  std::string name;
  Family family = Family::Grid;
  std::vector<TaskSpec> tasks;
  std::vector<Sample> samples;
  std::size_t split = 0;
  std::uint64_t seed = 0;

  // Generator parameters the label rules depend on.
  std::vector<std::vector<int>> motifs;  // sequence
  std::vector<float> rule;               // table: weights of the linear rule

  std::span<const Sample> view(Split s) const;
  std::size_t size(Split s) const { return view(s).size(); }
};

struct GridDataConfig {
  std::size_t n = 512;
  std::size_t height = 16;
  std::size_t width = 16;
  std::size_t channels = 1;
  std::size_t classes = 4;
  std::size_t patch = 4;  // resolution of the occupancy map
  double noise = 0.3;
  double train_fraction = 0.8;
  std::uint64_t seed = 1;
};

/// Noise plus one of K blobs, each confined to its own cell of a K-cell
/// layout. Tasks: "class" (cell id) and "occupancy" (per patch, 1 when the
/// blob covers at least half the patch).
SyntheticDataset gen_grid_dataset(const GridDataConfig& cfg);

struct SequenceDataConfig {
  std::size_t n = 512;
  std::size_t length = 16;
  std::size_t vocab = 16;
  std::size_t classes = 4;
  std::size_t motif_length = 3;
  double train_fraction = 0.8;
  std::uint64_t seed = 2;
};

/// Random symbols with exactly one planted motif. Tasks: "motif" (which of
/// K motifs) and "half" (0 when the motif starts in the first half of the
/// admissible start positions).
SyntheticDataset gen_sequence_dataset(const SequenceDataConfig& cfg);

struct SetDataConfig {
  std::size_t n = 512;
  std::size_t points = 64;
  std::size_t classes = 3;  // sphere, cube, plane (cycled if more)
  double jitter = 0.02;
  double train_fraction = 0.8;
  std::uint64_t seed = 3;
};

/// Points on a randomly rotated sphere / cube / square surface. Task "shape".
SyntheticDataset gen_set_dataset(const SetDataConfig& cfg);

struct TableDataConfig {
  std::size_t n = 200;
  std::size_t numeric = 4;
  std::vector<std::size_t> categorical = {3, 4};
  double train_fraction = 0.8;
  std::uint64_t seed = 4;
};

/// Rows with numeric then categorical fields. Task "sign": 1 when the linear
/// rule over standardized numeric fields plus per-category offsets is positive.
SyntheticDataset gen_table_dataset(const TableDataConfig& cfg);

/// Schema matching gen_table_dataset's field layout.
std::vector<TableField> table_schema(const TableDataConfig& cfg);

/// Epoch-shuffled, without-replacement batches over `count` items. The
/// permutation of epoch e depends only on (seed, e). The last batch of an
/// epoch may be short.
class BatchIterator {
 public:
  BatchIterator(std::size_t count, std::size_t batch, std::uint64_t seed);

  std::vector<std::size_t> next();
  std::size_t epoch() const noexcept { return epoch_; }
  std::size_t batches_per_epoch() const noexcept { return (count_ + batch_ - 1) / batch_; }

 private:
  void reshuffle();

  std::size_t count_;
  std::size_t batch_;
  std::uint64_t seed_;
  std::size_t epoch_ = 0;
  std::size_t pos_ = 0;
  std::vector<std::size_t> order_;
};

/// Throws std::invalid_argument when `batch` exceeds the split size.
BatchIterator iterate(const SyntheticDataset& dataset, Split split, std::size_t batch, std::uint64_t seed);

/// Without-replacement draws over [0, count) that reshuffle on exhaustion,
/// so no index repeats until all have been used.
class DrawCursor {
 public:
  explicit DrawCursor(std::size_t count = 0) : count_(count) {}

  std::vector<std::size_t> draw(std::size_t k, Rng& rng);

  std::size_t count() const noexcept { return count_; }
  const std::vector<std::size_t>& order() const noexcept { return order_; }
  std::size_t position() const noexcept { return pos_; }
  void restore(std::vector<std::size_t> order, std::size_t position);

 private:
  std::size_t count_;
  std::vector<std::size_t> order_;
  std::size_t pos_ = 0;
};

}  // namespace ow
