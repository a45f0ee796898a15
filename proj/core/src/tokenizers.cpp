#include "ow/tokenizers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "binary_io.hpp"
#include "ow/errors.hpp"
#include "ow/init.hpp"
#include "ow/ops.hpp"

namespace ow {

namespace {

constexpr double kNormEps = 1e-6;

// z-score over the whole sample; a constant sample maps to zeros.
template <typename T>
std::vector<T> zscore(std::span<const float> values) {
  double mu = 0;
  for (float v : values) mu += v;
  mu /= double(values.size());
  double var = 0;
  for (float v : values) var += (v - mu) * (v - mu);
  var /= double(values.size());
  const double inv = 1.0 / std::sqrt(var + kNormEps);
  std::vector<T> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = T((values[i] - mu) * inv);
  return out;
}

template <typename T>
std::vector<T> zscore(std::span<const T> values) {
  std::vector<float> tmp(values.begin(), values.end());
  return zscore<T>(std::span<const float>(tmp));
}

template <typename T>
Tensor<T> repeat_rows(const std::vector<T>& table, std::size_t count, std::size_t width, std::size_t batch) {
  std::vector<T> out;
  out.reserve(batch * table.size());
  for (std::size_t b = 0; b < batch; ++b) out.insert(out.end(), table.begin(), table.end());
  return Tensor<T>::from({batch * count, width}, std::move(out));
}

template <typename T>
std::vector<T> cast_table(const std::vector<double>& v) {
  return std::vector<T>(v.begin(), v.end());
}

}  // namespace

// ---- TokenSequence ---------------------------------------------------------

template <typename T>
void TokenSequence<T>::validate() const {
  if (!tokens.defined() || tokens.rank() != 2) throw ShapeError("token sequence: tokens must be a rank-2 tensor");
  if (count == 0 || batch == 0) throw ShapeError("token sequence: needs at least one token per sample");
  if (tokens.rows() != rows()) {
    throw ShapeError("token sequence: " + std::to_string(tokens.rows()) + " rows, expected " +
                     std::to_string(batch) + "x" + std::to_string(count));
  }
  if (!positions.defined() || positions.shape() != tokens.shape()) {
    throw ShapeError("token sequence: positions must match tokens " + shape_string(tokens.shape()));
  }
  if (!mask.empty() && mask.size() != rows()) throw ShapeError("token sequence: mask length differs from row count");
  for (T v : tokens.values()) {
    if (!std::isfinite(v)) throw NumericError("token sequence: non-finite token value");
  }
}

std::vector<double> sinusoid_table(std::size_t positions, std::size_t width) {
  std::vector<double> pe(positions * width);
  for (std::size_t p = 0; p < positions; ++p) {
    for (std::size_t i = 0; i < width / 2; ++i) {
      const double freq = std::pow(10000.0, -2.0 * double(i) / double(width));
      pe[p * width + 2 * i] = std::sin(double(p) * freq);
      pe[p * width + 2 * i + 1] = std::cos(double(p) * freq);
    }
  }
  return pe;
}

std::vector<double> sinusoid_grid(std::size_t rows, std::size_t cols, std::size_t width) {
  const std::size_t half = width / 2;
  const auto row_pe = sinusoid_table(rows, half);
  const auto col_pe = sinusoid_table(cols, half);
  std::vector<double> pe(rows * cols * width);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      double* dst = pe.data() + (r * cols + c) * width;
      std::copy_n(row_pe.data() + r * half, half, dst);
      std::copy_n(col_pe.data() + c * half, half, dst + half);
    }
  }
  return pe;
}

std::vector<std::size_t> farthest_point_sample(std::span<const float> points, std::size_t stride,
                                               std::size_t count) {
  const std::size_t n = points.size() / stride;
  if (count > n) throw std::invalid_argument("farthest_point_sample: more centroids than points");
  std::vector<std::size_t> chosen;
  chosen.reserve(count);
  if (count == 0) return chosen;
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  std::size_t last = 0;
  chosen.push_back(last);
  while (chosen.size() < count) {
    std::size_t best = 0;
    double best_d = -1;
    for (std::size_t i = 0; i < n; ++i) {
      double d = 0;
      for (std::size_t a = 0; a < 3; ++a) {
        const double diff = double(points[i * stride + a]) - double(points[last * stride + a]);
        d += diff * diff;
      }
      dist[i] = std::min(dist[i], d);
      if (dist[i] > best_d) {
        best_d = dist[i];
        best = i;
      }
    }
    last = best;
    chosen.push_back(last);
  }
  return chosen;
}

std::vector<std::size_t> nearest_neighbors(std::span<const float> points, std::size_t stride, std::size_t center,
                                           std::size_t k) {
  const std::size_t n = points.size() / stride;
  std::vector<std::pair<double, std::size_t>> d(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0;
    for (std::size_t a = 0; a < 3; ++a) {
      const double diff = double(points[i * stride + a]) - double(points[center * stride + a]);
      s += diff * diff;
    }
    d[i] = {s, i};
  }
  std::partial_sort(d.begin(), d.begin() + std::ptrdiff_t(k), d.end());
  std::vector<std::size_t> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = d[i].second;
  return out;
}

// ---- Tokenizer base --------------------------------------------------------

template <typename T>
TokenSequence<T> Tokenizer<T>::tokenize(const Sample& sample) const {
  const Sample* one[] = {&sample};
  return tokenize(std::span<const Sample* const>(one));
}

template <typename T>
Tensor<T> Tokenizer<T>::raw_tokens(std::span<const Sample* const>) const {
  throw std::logic_error(std::string(family_name(config_.family)) + " tokenizer has no continuous targets");
}

template <typename T>
std::vector<NamedTensor<T>> Tokenizer<T>::parameters(const std::string& prefix) const {
  std::vector<NamedTensor<T>> out;
  collect(prefix, out);
  return out;
}

template <typename T>
void Tokenizer<T>::check_batch(std::span<const Sample* const> samples) const {
  if (samples.empty()) throw ShapeError("tokenize: empty batch");
  const auto& c = config_;
  for (const Sample* s : samples) {
    switch (c.family) {
      case Family::Grid:
        if (s->values.size() != c.height * c.width * c.channels) {
          throw ShapeError("grid sample has " + std::to_string(s->values.size()) + " values, expected " +
                           std::to_string(c.height) + "x" + std::to_string(c.width) + "x" + std::to_string(c.channels));
        }
        break;
      case Family::Sequence:
        if (c.symbolic()) {
          if (s->symbols.size() != c.length) {
            throw ShapeError("sequence sample has " + std::to_string(s->symbols.size()) + " symbols, expected " +
                             std::to_string(c.length));
          }
          for (int id : s->symbols) {
            if (id < 0 || std::size_t(id) >= c.vocab) {
              throw std::out_of_range("unknown symbol id " + std::to_string(id) + " (vocabulary " +
                                      std::to_string(c.vocab) + ")");
            }
          }
        } else if (s->values.size() != c.length) {
          throw ShapeError("series sample has " + std::to_string(s->values.size()) + " values, expected " +
                           std::to_string(c.length));
        }
        break;
      case Family::Set:
        if (s->values.size() % (3 + c.point_features) != 0) throw ShapeError("set sample is not N x (3+F)");
        if (s->values.size() / (3 + c.point_features) < c.groups * c.group_size) {
          throw ShapeError("set sample has " + std::to_string(s->values.size() / (3 + c.point_features)) +
                           " points, needs groups*group_size = " + std::to_string(c.groups * c.group_size));
        }
        break;
      case Family::Table:
        if (s->values.size() != c.fields.size()) {
          throw ShapeError("table row has " + std::to_string(s->values.size()) + " fields, schema has " +
                           std::to_string(c.fields.size()));
        }
        break;
    }
  }
}

// ---- Grid ------------------------------------------------------------------

template <typename T>
GridTokenizer<T>::GridTokenizer(TokenizerConfig config, std::size_t modality, Rng& rng)
    : Tokenizer<T>(std::move(config), modality) {
  this->config_.validate();
  const auto& c = this->config_;
  weight_ = xavier_uniform<T>(c.raw_width(), c.d_tok, rng);
  bias_ = zeros_param<T>({c.d_tok});
  positions_ = cast_table<T>(sinusoid_grid(c.height / c.patch, c.width / c.patch, c.d_tok));
}

template <typename T>
Tensor<T> GridTokenizer<T>::raw_tokens(std::span<const Sample* const> samples) const {
  this->check_batch(samples);
  const auto& c = this->config_;
  const std::size_t n = c.token_count(), pdim = c.raw_width(), pw = c.width / c.patch;
  std::vector<T> out(samples.size() * n * pdim);
  for (std::size_t b = 0; b < samples.size(); ++b) {
    const auto norm = zscore<T>(std::span<const float>(samples[b]->values));
    for (std::size_t t = 0; t < n; ++t) {
      const std::size_t py = t / pw, px = t % pw;
      T* dst = out.data() + (b * n + t) * pdim;
      std::size_t k = 0;
      for (std::size_t dy = 0; dy < c.patch; ++dy)
        for (std::size_t dx = 0; dx < c.patch; ++dx)
          for (std::size_t ch = 0; ch < c.channels; ++ch) {
            const std::size_t y = py * c.patch + dy, x = px * c.patch + dx;
            dst[k++] = norm[(y * c.width + x) * c.channels + ch];
          }
    }
  }
  return Tensor<T>::from({samples.size() * n, pdim}, std::move(out));
}

template <typename T>
TokenSequence<T> GridTokenizer<T>::tokenize(std::span<const Sample* const> samples) const {
  const auto& c = this->config_;
  TokenSequence<T> seq;
  seq.tokens = add_bias(matmul(raw_tokens(samples), weight_), bias_);
  seq.positions = repeat_rows(positions_, c.token_count(), c.d_tok, samples.size());
  seq.modality = this->modality_;
  seq.batch = samples.size();
  seq.count = c.token_count();
  return seq;
}

template <typename T>
void GridTokenizer<T>::collect(const std::string& prefix, std::vector<NamedTensor<T>>& out) const {
  out.push_back({prefix + "proj.w", weight_});
  out.push_back({prefix + "proj.b", bias_});
}

// ---- Sequence --------------------------------------------------------------

template <typename T>
SequenceTokenizer<T>::SequenceTokenizer(TokenizerConfig config, std::size_t modality, Rng& rng)
    : Tokenizer<T>(std::move(config), modality) {
  this->config_.validate();
  const auto& c = this->config_;
  if (c.symbolic()) {
    weight_ = normal_init<T>({c.vocab + 1, c.d_tok}, 1.0, rng);
  } else {
    weight_ = xavier_uniform<T>(c.window, c.d_tok, rng);
    bias_ = zeros_param<T>({c.d_tok});
  }
  positions_ = cast_table<T>(sinusoid_table(c.token_count(), c.d_tok));
}

template <typename T>
TokenSequence<T> SequenceTokenizer<T>::embed_symbols(std::span<const std::vector<int>> ids) const {
  const auto& c = this->config_;
  if (!c.symbolic()) throw std::logic_error("embed_symbols on a real-valued sequence tokenizer");
  if (ids.empty()) throw ShapeError("embed_symbols: empty batch");
  std::vector<std::size_t> rows;
  rows.reserve(ids.size() * c.length);
  for (const auto& row : ids) {
    if (row.size() != c.length) throw ShapeError("embed_symbols: row length differs from configured length");
    for (int id : row) {
      if (id < 0 || std::size_t(id) > c.vocab) throw std::out_of_range("unknown symbol id " + std::to_string(id));
      rows.push_back(std::size_t(id));
    }
  }
  TokenSequence<T> seq;
  seq.tokens = gather_rows(weight_, std::span<const std::size_t>(rows));
  seq.positions = repeat_rows(positions_, c.length, c.d_tok, ids.size());
  seq.modality = this->modality_;
  seq.batch = ids.size();
  seq.count = c.length;
  return seq;
}

template <typename T>
Tensor<T> SequenceTokenizer<T>::raw_tokens(std::span<const Sample* const> samples) const {
  const auto& c = this->config_;
  if (c.symbolic()) return Tokenizer<T>::raw_tokens(samples);
  this->check_batch(samples);
  std::vector<T> out;
  out.reserve(samples.size() * c.length);
  for (const Sample* s : samples) {
    const auto norm = zscore<T>(std::span<const float>(s->values));
    out.insert(out.end(), norm.begin(), norm.end());
  }
  return Tensor<T>::from({samples.size() * c.token_count(), c.window}, std::move(out));
}

template <typename T>
TokenSequence<T> SequenceTokenizer<T>::tokenize(std::span<const Sample* const> samples) const {
  const auto& c = this->config_;
  this->check_batch(samples);
  if (c.symbolic()) {
    std::vector<std::vector<int>> ids;
    ids.reserve(samples.size());
    for (const Sample* s : samples) ids.push_back(s->symbols);
    return embed_symbols(ids);
  }
  TokenSequence<T> seq;
  seq.tokens = add_bias(matmul(raw_tokens(samples), weight_), bias_);
  seq.positions = repeat_rows(positions_, c.token_count(), c.d_tok, samples.size());
  seq.modality = this->modality_;
  seq.batch = samples.size();
  seq.count = c.token_count();
  return seq;
}

template <typename T>
void SequenceTokenizer<T>::collect(const std::string& prefix, std::vector<NamedTensor<T>>& out) const {
  if (this->config_.symbolic()) {
    out.push_back({prefix + "embed", weight_});
  } else {
    out.push_back({prefix + "proj.w", weight_});
    out.push_back({prefix + "proj.b", bias_});
  }
}

// ---- Set -------------------------------------------------------------------

template <typename T>
SetTokenizer<T>::SetTokenizer(TokenizerConfig config, std::size_t modality, Rng& rng)
    : Tokenizer<T>(std::move(config), modality) {
  this->config_.validate();
  const auto& c = this->config_;
  weight_ = xavier_uniform<T>(c.raw_width(), c.d_tok, rng);
  bias_ = zeros_param<T>({c.d_tok});
  pos_weight_ = xavier_uniform<T>(3, c.d_tok, rng);
  pos_bias_ = zeros_param<T>({c.d_tok});
}

template <typename T>
typename SetTokenizer<T>::Groups SetTokenizer<T>::group(const Sample& sample) const {
  const auto& c = this->config_;
  const std::size_t stride = 3 + c.point_features;
  std::span<const float> pts(sample.values);
  const auto centers = farthest_point_sample(pts, stride, c.groups);
  Groups g;
  g.members.reserve(c.groups * c.raw_width());
  g.centroids.reserve(c.groups * 3);
  for (std::size_t center : centers) {
    for (std::size_t a = 0; a < 3; ++a) g.centroids.push_back(T(pts[center * stride + a]));
    for (std::size_t idx : nearest_neighbors(pts, stride, center, c.group_size)) {
      for (std::size_t a = 0; a < stride; ++a) {
        const double v = double(pts[idx * stride + a]) - (a < 3 ? double(pts[center * stride + a]) : 0.0);
        g.members.push_back(T(v));
      }
    }
  }
  g.members = zscore<T>(std::span<const T>(g.members));
  return g;
}

template <typename T>
Tensor<T> SetTokenizer<T>::raw_tokens(std::span<const Sample* const> samples) const {
  this->check_batch(samples);
  const auto& c = this->config_;
  std::vector<T> out;
  out.reserve(samples.size() * c.groups * c.raw_width());
  for (const Sample* s : samples) {
    auto g = group(*s);
    out.insert(out.end(), g.members.begin(), g.members.end());
  }
  return Tensor<T>::from({samples.size() * c.groups, c.raw_width()}, std::move(out));
}

template <typename T>
TokenSequence<T> SetTokenizer<T>::tokenize(std::span<const Sample* const> samples) const {
  this->check_batch(samples);
  const auto& c = this->config_;
  std::vector<T> members, centroids;
  members.reserve(samples.size() * c.groups * c.raw_width());
  centroids.reserve(samples.size() * c.groups * 3);
  for (const Sample* s : samples) {
    auto g = group(*s);
    members.insert(members.end(), g.members.begin(), g.members.end());
    centroids.insert(centroids.end(), g.centroids.begin(), g.centroids.end());
  }
  const std::size_t rows = samples.size() * c.groups;
  TokenSequence<T> seq;
  seq.tokens = add_bias(matmul(Tensor<T>::from({rows, c.raw_width()}, std::move(members)), weight_), bias_);
  seq.positions = add_bias(matmul(Tensor<T>::from({rows, 3}, std::move(centroids)), pos_weight_), pos_bias_);
  seq.modality = this->modality_;
  seq.batch = samples.size();
  seq.count = c.groups;
  return seq;
}

template <typename T>
void SetTokenizer<T>::collect(const std::string& prefix, std::vector<NamedTensor<T>>& out) const {
  out.push_back({prefix + "proj.w", weight_});
  out.push_back({prefix + "proj.b", bias_});
  out.push_back({prefix + "pos.w", pos_weight_});
  out.push_back({prefix + "pos.b", pos_bias_});
}

// ---- Table -----------------------------------------------------------------

template <typename T>
TableTokenizer<T>::TableTokenizer(TokenizerConfig config, std::size_t modality, Rng& rng)
    : Tokenizer<T>(std::move(config), modality) {
  this->config_.validate();
  const auto& c = this->config_;
  const std::size_t f = c.fields.size();
  std::size_t rows = f;
  for (const auto& field : c.fields) {
    category_offset_.push_back(rows);
    if (field.categorical) rows += field.cardinality;
  }
  numeric_weight_ = normal_init<T>({f, c.d_tok}, 1.0, rng);
  table_ = normal_init<T>({rows, c.d_tok}, 1.0, rng);
  means_.assign(f, 0.0);
  stddevs_.assign(f, 1.0);
  positions_ = cast_table<T>(sinusoid_table(f, c.d_tok));
}

template <typename T>
void TableTokenizer<T>::fit(std::span<const Sample> training) {
  const auto& fields = this->config_.fields;
  if (training.empty()) throw std::invalid_argument("table tokenizer fit on an empty split");
  for (std::size_t f = 0; f < fields.size(); ++f) {
    if (fields[f].categorical) continue;
    double mu = 0;
    for (const auto& s : training) mu += s.values.at(f);
    mu /= double(training.size());
    double var = 0;
    for (const auto& s : training) var += (s.values[f] - mu) * (s.values[f] - mu);
    var /= double(training.size());
    means_[f] = mu;
    stddevs_[f] = var > 0 ? std::sqrt(var) : 1.0;
  }
}

template <typename T>
TokenSequence<T> TableTokenizer<T>::tokenize(std::span<const Sample* const> samples) const {
  this->check_batch(samples);
  const auto& c = this->config_;
  const std::size_t f = c.fields.size(), batch = samples.size();
  std::vector<T> scaled(batch * f * f, T(0));
  std::vector<std::size_t> rows(batch * f);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t i = 0; i < f; ++i) {
      const double v = samples[b]->values[i];
      const std::size_t r = b * f + i;
      if (c.fields[i].categorical) {
        const auto cat = static_cast<long long>(std::llround(v));
        if (cat < 0 || std::size_t(cat) >= c.fields[i].cardinality || double(cat) != v) {
          throw std::out_of_range("table field " + std::to_string(i) + ": category " + std::to_string(v) +
                                  " outside [0, " + std::to_string(c.fields[i].cardinality) + ")");
        }
        rows[r] = category_offset_[i] + std::size_t(cat);
      } else {
        scaled[r * f + i] = T((v - means_[i]) / stddevs_[i]);
        rows[r] = i;
      }
    }
  }
  TokenSequence<T> seq;
  seq.tokens = add(matmul(Tensor<T>::from({batch * f, f}, std::move(scaled)), numeric_weight_),
                   gather_rows(table_, std::span<const std::size_t>(rows)));
  seq.positions = repeat_rows(positions_, f, c.d_tok, batch);
  seq.modality = this->modality_;
  seq.batch = batch;
  seq.count = f;
  return seq;
}

template <typename T>
void TableTokenizer<T>::collect(const std::string& prefix, std::vector<NamedTensor<T>>& out) const {
  out.push_back({prefix + "numeric.w", numeric_weight_});
  out.push_back({prefix + "table", table_});
}

template <typename T>
std::unique_ptr<Tokenizer<T>> make_tokenizer(const TokenizerConfig& config, std::size_t modality, Rng& rng) {
  switch (config.family) {
    case Family::Grid: return std::make_unique<GridTokenizer<T>>(config, modality, rng);
    case Family::Sequence: return std::make_unique<SequenceTokenizer<T>>(config, modality, rng);
    case Family::Set: return std::make_unique<SetTokenizer<T>>(config, modality, rng);
    case Family::Table: return std::make_unique<TableTokenizer<T>>(config, modality, rng);
  }
  throw std::invalid_argument("unknown tokenizer family");
}

// ---- OWTK ------------------------------------------------------------------

void write_token_dump(std::ostream& out, std::size_t rows, std::size_t width, std::span<const float> values) {
  if (values.size() != rows * width) throw ShapeError("token dump: value count does not match rows x width");
  out.write("OWTK", 4);
  binary::put_u32(out, kTokenDumpVersion);
  binary::put_u32(out, std::uint32_t(rows));
  binary::put_u32(out, std::uint32_t(width));
  for (float v : values) binary::put_f32(out, v);
}

TokenDump read_token_dump(std::istream& in) {
  binary::expect_magic(in, "OWTK");
  const auto version = binary::get_u32(in, "token dump version");
  if (version != kTokenDumpVersion) {
    throw CheckpointError("token dump version " + std::to_string(version) + " unsupported (expected " +
                          std::to_string(kTokenDumpVersion) + ")");
  }
  TokenDump dump;
  dump.rows = binary::get_u32(in, "token dump rows");
  dump.width = binary::get_u32(in, "token dump width");
  dump.values.resize(dump.rows * dump.width);
  for (auto& v : dump.values) v = binary::get_f32(in, "token dump payload");
  return dump;
}

template <typename T>
void write_tokens(std::ostream& out, const Tensor<T>& tokens) {
  std::vector<float> v(tokens.values().begin(), tokens.values().end());
  write_token_dump(out, tokens.rows(), tokens.cols(), v);
}

template struct TokenSequence<float>;
template struct TokenSequence<double>;
template class Tokenizer<float>;
template class Tokenizer<double>;
template class GridTokenizer<float>;
template class GridTokenizer<double>;
template class SequenceTokenizer<float>;
template class SequenceTokenizer<double>;
template class SetTokenizer<float>;
template class SetTokenizer<double>;
template class TableTokenizer<float>;
template class TableTokenizer<double>;
template std::unique_ptr<Tokenizer<float>> make_tokenizer(const TokenizerConfig&, std::size_t, Rng&);
template std::unique_ptr<Tokenizer<double>> make_tokenizer(const TokenizerConfig&, std::size_t, Rng&);
template void write_tokens(std::ostream&, const Tensor<float>&);
template void write_tokens(std::ostream&, const Tensor<double>&);

}  // namespace ow
