#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "ow/errors.hpp"
#include "ow/tokenizers.hpp"

namespace ow {
namespace {

using Td = Tensor<double>;

std::unique_ptr<Tokenizer<double>> make(const TokenizerConfig& c, std::uint64_t seed = 1) {
  Rng rng(seed);
  return make_tokenizer<double>(c, 0, rng);
}

Tensor<double> param(const Tokenizer<double>& tok, const std::string& name) {
  for (auto& p : tok.parameters("")) {
    if (p.name == name) return p.tensor;
  }
  ADD_FAILURE() << "no parameter " << name;
  return {};
}

bool rows_equal(const Td& t, std::size_t a, std::size_t b) {
  for (std::size_t c = 0; c < t.cols(); ++c) {
    if (t.at(a, c) != t.at(b, c)) return false;
  }
  return true;
}

TEST(GridTokenizer, TokenCountFromPatches) {
  TokenizerConfig c;
  c.height = c.width = 32;
  c.channels = 3;
  c.patch = 8;
  c.d_tok = 8;
  EXPECT_EQ(c.token_count(), 16u);
  EXPECT_EQ(c.raw_width(), 8u * 8 * 3);
  Sample s;
  s.values.assign(32 * 32 * 3, 0.0f);
  for (std::size_t i = 0; i < s.values.size(); ++i) s.values[i] = float(i % 7);
  const auto seq = make(c)->tokenize(s);
  EXPECT_EQ(seq.tokens.shape(), (Shape{16, 8}));
  EXPECT_EQ(seq.positions.shape(), (Shape{16, 8}));
}

TEST(GridTokenizer, PatchMustDivideExtents) {
  TokenizerConfig c;
  c.height = 30;
  c.width = 32;
  c.patch = 8;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  EXPECT_THROW(make(c), std::invalid_argument);
}

TEST(GridTokenizer, ConstantGridGivesIdenticalTokenRows) {
  TokenizerConfig c;
  c.d_tok = 8;
  Sample s;
  s.values.assign(16 * 16, 3.5f);
  auto tok = make(c);
  const auto raw = tok->raw_tokens(std::vector<const Sample*>{&s});
  for (double v : raw.values()) EXPECT_EQ(v, 0.0);
  const auto seq = tok->tokenize(s);
  for (std::size_t r = 1; r < seq.count; ++r) EXPECT_TRUE(rows_equal(seq.tokens, 0, r));
  EXPECT_FALSE(rows_equal(seq.positions, 0, 1));
}

TEST(SequenceTokenizer, RealSeriesWindows) {
  TokenizerConfig c;
  c.family = Family::Sequence;
  c.length = 12;
  c.window = 3;
  c.d_tok = 4;
  EXPECT_EQ(c.token_count(), 4u);
  Sample s;
  for (int i = 0; i < 12; ++i) s.values.push_back(float(std::sin(i)));
  EXPECT_EQ(make(c)->tokenize(s).tokens.shape(), (Shape{4, 4}));
}

TEST(SequenceTokenizer, SymbolLookupEqualsEmbeddingRow) {
  TokenizerConfig c;
  c.family = Family::Sequence;
  c.length = 5;
  c.vocab = 6;
  c.d_tok = 4;
  auto tok = make(c);
  Sample s;
  s.symbols = {2, 5, 2, 0, 1};
  const auto seq = tok->tokenize(s);
  const auto table = param(*tok, "embed");
  ASSERT_EQ(table.shape(), (Shape{7, 4}));
  // One-hot row times the table is the embedding row.
  for (std::size_t t = 0; t < 5; ++t) {
    std::vector<double> onehot(7, 0.0);
    onehot[std::size_t(s.symbols[t])] = 1.0;
    for (std::size_t d = 0; d < 4; ++d) {
      double want = 0;
      for (std::size_t v = 0; v < 7; ++v) want += onehot[v] * table.at(v, d);
      EXPECT_EQ(seq.tokens.at(t, d), want);
    }
  }
  EXPECT_TRUE(rows_equal(seq.tokens, 0, 2));
  EXPECT_FALSE(rows_equal(seq.positions, 0, 2));
}

TEST(SequenceTokenizer, MaskSymbolAndRangeChecks) {
  TokenizerConfig c;
  c.family = Family::Sequence;
  c.length = 3;
  c.vocab = 4;
  c.d_tok = 4;
  Rng rng(2);
  SequenceTokenizer<double> tok(c, 0, rng);
  EXPECT_EQ(tok.mask_symbol(), 4);
  const std::vector<std::vector<int>> ok{{4, 0, 3}};
  EXPECT_EQ(tok.embed_symbols(ok).tokens.rows(), 3u);
  const std::vector<std::vector<int>> bad{{5, 0, 3}};
  EXPECT_THROW(tok.embed_symbols(bad), std::out_of_range);
}

TEST(Sinusoid, StandardTable) {
  const auto t = sinusoid_table(2, 4);
  const double want[] = {0, 1, 0, 1, std::sin(1.0), std::cos(1.0), std::sin(0.01), std::cos(0.01)};
  for (int i = 0; i < 8; ++i) EXPECT_NEAR(t[i], want[i], 1e-12);
}

TEST(SetTokenizer, FarthestPointOnSquareCorners) {
  const float sq[] = {0, 0, 0, 1, 0, 0, 1, 1, 0, 0, 1, 0};
  const auto idx = farthest_point_sample(std::span<const float>(sq), 3, 3);
  ASSERT_EQ(idx.size(), 3u);
  EXPECT_EQ(idx[0], 0u);
  EXPECT_EQ(idx[1], 2u);
  EXPECT_EQ(idx[2], 1u);  // tie between 1 and 3 goes to the lower index
  const auto nn = nearest_neighbors(std::span<const float>(sq), 3, 0, 3);
  EXPECT_EQ(nn, (std::vector<std::size_t>{0, 1, 3}));
}

TEST(SetTokenizer, GroupCountAndTranslationInvariance) {
  TokenizerConfig c;
  c.family = Family::Set;
  c.points = 64;
  c.groups = 4;
  c.group_size = 16;
  c.d_tok = 8;
  EXPECT_EQ(c.token_count(), 4u);
  auto tok = make(c);
  Rng rng(4);
  std::normal_distribution<double> d(0, 1);
  Sample a, b;
  for (std::size_t i = 0; i < 64 * 3; ++i) a.values.push_back(float(d(rng)));
  b.values = a.values;
  for (std::size_t i = 0; i < 64; ++i) b.values[3 * i] += 5.0f;
  const auto ta = tok->tokenize(a), tb = tok->tokenize(b);
  for (std::size_t i = 0; i < ta.tokens.numel(); ++i) EXPECT_NEAR(ta.tokens.values()[i], tb.tokens.values()[i], 1e-5);
  double moved = 0;
  for (std::size_t i = 0; i < ta.positions.numel(); ++i) {
    moved += std::abs(ta.positions.values()[i] - tb.positions.values()[i]);
  }
  EXPECT_GT(moved, 1e-3);
}

TEST(TableTokenizer, OneTokenPerFieldAndLocalChange) {
  TableDataConfig dc;
  dc.numeric = 3;
  dc.categorical = {2, 3};
  TokenizerConfig c;
  c.family = Family::Table;
  c.d_tok = 4;
  c.fields = table_schema(dc);
  Rng rng(5);
  TableTokenizer<double> tok(c, 0, rng);
  const auto ds = gen_table_dataset(dc);
  tok.fit(ds.view(Split::Train));
  Sample a = ds.samples[0], b = a;
  b.values[1] += 1.0f;
  const auto ta = tok.tokenize(a), tb = tok.tokenize(b);
  EXPECT_EQ(ta.count, 5u);
  int differing = 0;
  for (std::size_t r = 0; r < 5; ++r) {
    bool same = true;
    for (std::size_t k = 0; k < 4; ++k) same = same && ta.tokens.at(r, k) == tb.tokens.at(r, k);
    differing += !same;
  }
  EXPECT_EQ(differing, 1);
  Sample cat = a;
  cat.values[4] = float((int(a.values[4]) + 1) % 3);
  const auto tc = tok.tokenize(cat);
  for (std::size_t k = 0; k < 4; ++k) EXPECT_EQ(tc.tokens.at(0, k), ta.tokens.at(0, k));
}

TEST(TableTokenizer, FitStoresTrainSplitMoments) {
  TableDataConfig dc;
  TokenizerConfig c;
  c.family = Family::Table;
  c.fields = table_schema(dc);
  Rng rng(6);
  TableTokenizer<double> tok(c, 0, rng);
  const auto ds = gen_table_dataset(dc);
  const auto train = ds.view(Split::Train);
  tok.fit(train);
  for (std::size_t f = 0; f < dc.numeric; ++f) {
    double mu = 0, sq = 0;
    for (const auto& s : train) mu += s.values[f];
    mu /= double(train.size());
    for (const auto& s : train) sq += (s.values[f] - mu) * (s.values[f] - mu);
    EXPECT_NEAR(tok.means()[f], mu, 1e-9);
    EXPECT_NEAR(tok.stddevs()[f], std::sqrt(sq / double(train.size())), 1e-9);
  }
}

TEST(TokenDump, RoundTripAndCorruption) {
  std::stringstream ss;
  const std::vector<float> v{1.5f, -2.0f, 0.25f, 4.0f, 5.0f, 6.0f};
  write_token_dump(ss, 2, 3, v);
  const auto back = read_token_dump(ss);
  EXPECT_EQ(back.rows, 2u);
  EXPECT_EQ(back.width, 3u);
  EXPECT_EQ(back.values, v);

  std::stringstream bad;
  write_token_dump(bad, 2, 3, v);
  auto bytes = bad.str();
  bytes[0] = 'X';
  std::stringstream corrupted(bytes);
  EXPECT_THROW(read_token_dump(corrupted), CheckpointError);
  std::stringstream truncated(bad.str().substr(0, 20));
  EXPECT_THROW(read_token_dump(truncated), CheckpointError);
}

TEST(TokenSequence, ValidateCatchesLayoutErrors) {
  TokenSequence<double> seq;
  seq.tokens = Td::zeros({6, 4});
  seq.positions = Td::zeros({6, 4});
  seq.batch = 2;
  seq.count = 3;
  EXPECT_NO_THROW(seq.validate());
  seq.count = 4;
  EXPECT_THROW(seq.validate(), ShapeError);
  seq.count = 3;
  seq.mask.assign(5, false);
  EXPECT_THROW(seq.validate(), ShapeError);
}

}  // namespace
}  // namespace ow
