#include "ow/data.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace ow {

namespace {

std::size_t train_boundary(std::size_t n, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw std::invalid_argument("train_fraction must be in (0, 1]");
  auto b = static_cast<std::size_t>(std::llround(fraction * double(n)));
  return std::clamp<std::size_t>(b, 1, n);
}

template <typename Int>
Int uniform_int(Rng& rng, Int lo, Int hi) {
  return std::uniform_int_distribution<Int>(lo, hi)(rng);
}

}  // namespace

std::span<const Sample> SyntheticDataset::view(Split s) const {
  std::span<const Sample> all(samples);
  return s == Split::Train ? all.first(split) : all.subspan(split);
}

SyntheticDataset gen_grid_dataset(const GridDataConfig& cfg) {
  if (cfg.classes < 2) throw std::invalid_argument("grid dataset needs K >= 2");
  if (cfg.n == 0 || cfg.height == 0 || cfg.width == 0 || cfg.channels == 0 || cfg.patch == 0) {
    throw std::invalid_argument("grid dataset extents must be positive");
  }
  if (cfg.height % cfg.patch || cfg.width % cfg.patch) {
    throw std::invalid_argument("grid dataset patch must divide the extents");
  }
  const std::size_t cols = static_cast<std::size_t>(std::ceil(std::sqrt(double(cfg.classes))));
  const std::size_t rows = (cfg.classes + cols - 1) / cols;
  const std::size_t ch = cfg.height / rows, cw = cfg.width / cols;
  const std::size_t side_max = std::min(ch, cw);
  if (side_max < 2) throw std::invalid_argument("grid dataset too small for " + std::to_string(cfg.classes) + " cells");
  const std::size_t side_min = std::max<std::size_t>(2, side_max / 2);

  SyntheticDataset ds;
  ds.name = "grid";
  ds.family = Family::Grid;
  ds.seed = cfg.seed;
  ds.tasks = {TaskSpec::classification("class", cfg.classes), TaskSpec::dense("occupancy", 1)};
  ds.tasks[1].task = 1;
  ds.split = train_boundary(cfg.n, cfg.train_fraction);

  Rng rng = derive_rng(cfg.seed, {0x67726964});
  std::normal_distribution<double> gauss(0.0, 1.0);
  const std::size_t ph = cfg.height / cfg.patch, pw = cfg.width / cfg.patch;
  ds.samples.reserve(cfg.n);
  for (std::size_t s = 0; s < cfg.n; ++s) {
    const std::size_t label = uniform_int<std::size_t>(rng, 0, cfg.classes - 1);
    const std::size_t cy = (label / cols) * ch, cx = (label % cols) * cw;
    const std::size_t side = uniform_int<std::size_t>(rng, side_min, side_max);
    const std::size_t y0 = cy + uniform_int<std::size_t>(rng, 0, ch - side);
    const std::size_t x0 = cx + uniform_int<std::size_t>(rng, 0, cw - side);

    Sample sample;
    sample.values.resize(cfg.height * cfg.width * cfg.channels);
    std::vector<std::size_t> covered(ph * pw, 0);
    for (std::size_t y = 0; y < cfg.height; ++y) {
      for (std::size_t x = 0; x < cfg.width; ++x) {
        const bool inside = y >= y0 && y < y0 + side && x >= x0 && x < x0 + side;
        if (inside) ++covered[(y / cfg.patch) * pw + x / cfg.patch];
        for (std::size_t c = 0; c < cfg.channels; ++c) {
          sample.values[(y * cfg.width + x) * cfg.channels + c] =
              float((inside ? 1.0 : 0.0) + cfg.noise * gauss(rng));
        }
      }
    }
    TaskTarget cls;
    cls.label = int(label);
    TaskTarget occ;
    occ.dense.resize(ph * pw);
    const std::size_t area = cfg.patch * cfg.patch;
    for (std::size_t i = 0; i < covered.size(); ++i) occ.dense[i] = 2 * covered[i] >= area ? 1.0f : 0.0f;
    sample.targets = {cls, occ};
    ds.samples.push_back(std::move(sample));
  }
  return ds;
}

SyntheticDataset gen_sequence_dataset(const SequenceDataConfig& cfg) {
  if (cfg.vocab <= cfg.classes) throw std::invalid_argument("sequence dataset needs V > K");
  if (cfg.classes < 2) throw std::invalid_argument("sequence dataset needs K >= 2");
  if (cfg.motif_length == 0 || cfg.motif_length > cfg.length) {
    throw std::invalid_argument("motif length must be in [1, L]");
  }
  SyntheticDataset ds;
  ds.name = "sequence";
  ds.family = Family::Sequence;
  ds.seed = cfg.seed;
  ds.tasks = {TaskSpec::classification("motif", cfg.classes), TaskSpec::classification("half", 2)};
  ds.tasks[1].task = 1;
  ds.split = train_boundary(cfg.n, cfg.train_fraction);

  Rng rng = derive_rng(cfg.seed, {0x736571});
  const int v = int(cfg.vocab);
  while (ds.motifs.size() < cfg.classes) {
    std::vector<int> m(cfg.motif_length);
    for (auto& x : m) x = uniform_int<int>(rng, 0, v - 1);
    if (std::find(ds.motifs.begin(), ds.motifs.end(), m) == ds.motifs.end()) ds.motifs.push_back(std::move(m));
  }

  const std::size_t mlen = cfg.motif_length;
  const std::size_t starts = cfg.length - mlen + 1;
  auto occurrences = [&](const std::vector<int>& seq) {
    std::size_t count = 0;
    for (std::size_t p = 0; p + mlen <= seq.size(); ++p) {
      for (const auto& m : ds.motifs) {
        if (std::equal(m.begin(), m.end(), seq.begin() + std::ptrdiff_t(p))) ++count;
      }
    }
    return count;
  };

  ds.samples.reserve(cfg.n);
  for (std::size_t s = 0; s < cfg.n; ++s) {
    const std::size_t label = uniform_int<std::size_t>(rng, 0, cfg.classes - 1);
    const std::size_t start = uniform_int<std::size_t>(rng, 0, starts - 1);
    std::vector<int> seq(cfg.length);
    do {
      for (auto& x : seq) x = uniform_int<int>(rng, 0, v - 1);
      std::copy(ds.motifs[label].begin(), ds.motifs[label].end(), seq.begin() + std::ptrdiff_t(start));
    } while (occurrences(seq) != 1);

    Sample sample;
    sample.symbols = std::move(seq);
    TaskTarget motif;
    motif.label = int(label);
    TaskTarget half;
    half.label = 2 * start < starts ? 0 : 1;
    sample.targets = {motif, half};
    ds.samples.push_back(std::move(sample));
  }
  return ds;
}

SyntheticDataset gen_set_dataset(const SetDataConfig& cfg) {
  if (cfg.classes < 2 || cfg.points == 0) throw std::invalid_argument("set dataset needs K >= 2 and points > 0");
  SyntheticDataset ds;
  ds.name = "set";
  ds.family = Family::Set;
  ds.seed = cfg.seed;
  ds.tasks = {TaskSpec::classification("shape", cfg.classes)};
  ds.split = train_boundary(cfg.n, cfg.train_fraction);

  Rng rng = derive_rng(cfg.seed, {0x736574});
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  ds.samples.reserve(cfg.n);
  for (std::size_t s = 0; s < cfg.n; ++s) {
    const std::size_t label = uniform_int<std::size_t>(rng, 0, cfg.classes - 1);
    // Uniform random rotation from a normalized quaternion.
    double q[4];
    double qn = 0;
    for (auto& c : q) {
      c = gauss(rng);
      qn += c * c;
    }
    qn = std::sqrt(qn);
    for (auto& c : q) c /= qn;
    const double w = q[0], x = q[1], y = q[2], z = q[3];
    const double r[3][3] = {{1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)},
                            {2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)},
                            {2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)}};

    Sample sample;
    sample.values.resize(cfg.points * 3);
    for (std::size_t i = 0; i < cfg.points; ++i) {
      double p[3];
      switch (label % 3) {
        case 0: {  // sphere
          double norm = 0;
          for (auto& c : p) {
            c = gauss(rng);
            norm += c * c;
          }
          norm = std::sqrt(norm);
          for (auto& c : p) c /= norm;
          break;
        }
        case 1: {  // cube surface
          const int face = uniform_int<int>(rng, 0, 5);
          for (auto& c : p) c = unit(rng);
          p[face / 2] = face % 2 ? 1.0 : -1.0;
          break;
        }
        default:  // square in the z=0 plane
          p[0] = unit(rng);
          p[1] = unit(rng);
          p[2] = 0.0;
          break;
      }
      for (std::size_t a = 0; a < 3; ++a) {
        const double v = r[a][0] * p[0] + r[a][1] * p[1] + r[a][2] * p[2];
        sample.values[i * 3 + a] = float(v + cfg.jitter * gauss(rng));
      }
    }
    TaskTarget shape;
    shape.label = int(label);
    sample.targets = {shape};
    ds.samples.push_back(std::move(sample));
  }
  return ds;
}

std::vector<TableField> table_schema(const TableDataConfig& cfg) {
  std::vector<TableField> fields(cfg.numeric);
  for (auto c : cfg.categorical) fields.push_back({true, c});
  return fields;
}

SyntheticDataset gen_table_dataset(const TableDataConfig& cfg) {
  if (cfg.n == 0 || cfg.numeric + cfg.categorical.size() == 0) throw std::invalid_argument("empty table dataset");
  SyntheticDataset ds;
  ds.name = "table";
  ds.family = Family::Table;
  ds.seed = cfg.seed;
  ds.tasks = {TaskSpec::classification("sign", 2)};
  ds.split = train_boundary(cfg.n, cfg.train_fraction);

  Rng rng = derive_rng(cfg.seed, {0x746162});
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> mean_dist(-2.0, 2.0), scale_dist(0.5, 3.0);
  // rule layout: [weights (numeric)] [means (numeric)] [scales (numeric)] [offsets (sum of cardinalities)]
  std::vector<float> weights(cfg.numeric), means(cfg.numeric), scales(cfg.numeric);
  for (std::size_t f = 0; f < cfg.numeric; ++f) {
    weights[f] = float(gauss(rng));
    means[f] = float(mean_dist(rng));
    scales[f] = float(scale_dist(rng));
  }
  std::vector<float> offsets;
  for (auto card : cfg.categorical) {
    for (std::size_t c = 0; c < card; ++c) offsets.push_back(float(0.5 * gauss(rng)));
  }
  ds.rule = weights;
  ds.rule.insert(ds.rule.end(), means.begin(), means.end());
  ds.rule.insert(ds.rule.end(), scales.begin(), scales.end());
  ds.rule.insert(ds.rule.end(), offsets.begin(), offsets.end());

  ds.samples.reserve(cfg.n);
  for (std::size_t s = 0; s < cfg.n; ++s) {
    Sample sample;
    double score = 0;
    for (std::size_t f = 0; f < cfg.numeric; ++f) {
      const double z = gauss(rng);
      sample.values.push_back(float(means[f] + scales[f] * z));
      score += weights[f] * (double(sample.values.back()) - means[f]) / scales[f];
    }
    std::size_t offset = 0;
    for (auto card : cfg.categorical) {
      const std::size_t c = uniform_int<std::size_t>(rng, 0, card - 1);
      sample.values.push_back(float(c));
      score += offsets[offset + c];
      offset += card;
    }
    TaskTarget sign;
    sign.label = score > 0 ? 1 : 0;
    sample.targets = {sign};
    ds.samples.push_back(std::move(sample));
  }
  return ds;
}

BatchIterator::BatchIterator(std::size_t count, std::size_t batch, std::uint64_t seed)
    : count_(count), batch_(batch), seed_(seed) {
  if (batch == 0) throw std::invalid_argument("batch size must be positive");
  if (batch > count) {
    throw std::invalid_argument("batch size " + std::to_string(batch) + " exceeds split size " + std::to_string(count));
  }
  reshuffle();
}

void BatchIterator::reshuffle() {
  order_.resize(count_);
  std::iota(order_.begin(), order_.end(), std::size_t(0));
  Rng rng = derive_rng(seed_, {epoch_});
  std::shuffle(order_.begin(), order_.end(), rng);
  pos_ = 0;
}

std::vector<std::size_t> BatchIterator::next() {
  if (pos_ >= count_) {
    ++epoch_;
    reshuffle();
  }
  const std::size_t end = std::min(count_, pos_ + batch_);
  std::vector<std::size_t> out(order_.begin() + std::ptrdiff_t(pos_), order_.begin() + std::ptrdiff_t(end));
  pos_ = end;
  return out;
}

BatchIterator iterate(const SyntheticDataset& dataset, Split split, std::size_t batch, std::uint64_t seed) {
  return BatchIterator(dataset.size(split), batch, seed);
}

std::vector<std::size_t> DrawCursor::draw(std::size_t k, Rng& rng) {
  if (count_ == 0) throw std::invalid_argument("draw from an empty dataset");
  std::vector<std::size_t> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    if (pos_ >= order_.size()) {
      order_.resize(count_);
      std::iota(order_.begin(), order_.end(), std::size_t(0));
      std::shuffle(order_.begin(), order_.end(), rng);
      pos_ = 0;
    }
    out.push_back(order_[pos_++]);
  }
  return out;
}

void DrawCursor::restore(std::vector<std::size_t> order, std::size_t position) {
  if (!order.empty() && order.size() != count_) throw std::invalid_argument("draw cursor state does not match dataset");
  if (position > order.size()) throw std::invalid_argument("draw cursor position out of range");
  order_ = std::move(order);
  pos_ = position;
}

}  // namespace ow
