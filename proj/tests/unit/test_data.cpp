#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "ow/data.hpp"

namespace ow {
namespace {

TEST(GridData, LabelsFollowBlobCellAndCoverage) {
  GridDataConfig cfg;
  cfg.n = 60;
  cfg.noise = 0.0;
  const auto ds = gen_grid_dataset(cfg);
  const std::size_t cols = 2, ch = 8, cw = 8;  // K = 4 on 16 x 16
  for (const auto& s : ds.samples) {
    std::size_t y0 = 99, x0 = 99;
    for (std::size_t y = 0; y < 16; ++y) {
      for (std::size_t x = 0; x < 16; ++x) {
        if (s.values[y * 16 + x] > 0.5f) {
          y0 = std::min(y0, y);
          x0 = std::min(x0, x);
        }
      }
    }
    ASSERT_LT(y0, 16u);
    EXPECT_EQ(s.targets[0].label, int((y0 / ch) * cols + x0 / cw));
    ASSERT_EQ(s.targets[1].dense.size(), 16u);
    for (std::size_t py = 0; py < 4; ++py) {
      for (std::size_t px = 0; px < 4; ++px) {
        int on = 0;
        for (std::size_t y = 0; y < 4; ++y) {
          for (std::size_t x = 0; x < 4; ++x) on += s.values[(py * 4 + y) * 16 + px * 4 + x] > 0.5f;
        }
        EXPECT_EQ(s.targets[1].dense[py * 4 + px], on >= 8 ? 1.0f : 0.0f);
      }
    }
  }
}

TEST(SequenceData, ExactlyOneMotifAndHalfRule) {
  SequenceDataConfig cfg;
  cfg.n = 100;
  const auto ds = gen_sequence_dataset(cfg);
  ASSERT_EQ(ds.motifs.size(), cfg.classes);
  const std::size_t starts = cfg.length - cfg.motif_length + 1;
  for (const auto& s : ds.samples) {
    ASSERT_EQ(s.symbols.size(), cfg.length);
    int found = -1, hits = 0;
    std::size_t at = 0;
    for (std::size_t p = 0; p < starts; ++p) {
      for (std::size_t k = 0; k < ds.motifs.size(); ++k) {
        if (std::equal(ds.motifs[k].begin(), ds.motifs[k].end(), s.symbols.begin() + std::ptrdiff_t(p))) {
          found = int(k);
          at = p;
          ++hits;
        }
      }
    }
    ASSERT_EQ(hits, 1);
    EXPECT_EQ(s.targets[0].label, found);
    EXPECT_EQ(s.targets[1].label, at < (starts + 1) / 2 ? 0 : 1);
    for (int v : s.symbols) EXPECT_TRUE(v >= 0 && v < int(cfg.vocab));
  }
}

// Sphere: unit norms. Plane: coplanar through the origin. Cube: neither.
int classify_shape(const std::vector<float>& pts) {
  const std::size_t n = pts.size() / 3;
  bool sphere = true;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = std::hypot(pts[3 * i], pts[3 * i + 1], pts[3 * i + 2]);
    sphere = sphere && std::abs(r - 1.0) < 1e-5;
  }
  if (sphere) return 0;
  // Normal of the plane through the origin and two well-separated points.
  const float* a = &pts[0];
  std::size_t bi = 1;
  double best = 0;
  for (std::size_t i = 1; i < n; ++i) {
    const double cx = a[1] * pts[3 * i + 2] - a[2] * pts[3 * i + 1];
    const double cy = a[2] * pts[3 * i] - a[0] * pts[3 * i + 2];
    const double cz = a[0] * pts[3 * i + 1] - a[1] * pts[3 * i];
    const double m = std::hypot(cx, cy, cz);
    if (m > best) {
      best = m;
      bi = i;
    }
  }
  const float* b = &pts[3 * bi];
  const double nx = a[1] * b[2] - a[2] * b[1], ny = a[2] * b[0] - a[0] * b[2], nz = a[0] * b[1] - a[1] * b[0];
  const double nn = std::hypot(nx, ny, nz);
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(nx * pts[3 * i] + ny * pts[3 * i + 1] + nz * pts[3 * i + 2]) / nn > 1e-4) return 1;
  }
  return 2;
}

TEST(SetData, ShapesMatchGeometry) {
  SetDataConfig cfg;
  cfg.n = 45;
  cfg.jitter = 0.0;
  const auto ds = gen_set_dataset(cfg);
  for (const auto& s : ds.samples) {
    ASSERT_EQ(s.values.size(), cfg.points * 3);
    EXPECT_EQ(classify_shape(s.values), s.targets[0].label);
  }
}

TEST(TableData, SignFollowsLinearRule) {
  TableDataConfig cfg;
  const auto ds = gen_table_dataset(cfg);
  const std::size_t nf = cfg.numeric;
  ASSERT_EQ(ds.rule.size(), 3 * nf + 7);
  int positives = 0;
  for (const auto& s : ds.samples) {
    double score = 0;
    for (std::size_t f = 0; f < nf; ++f) {
      score += ds.rule[f] * (double(s.values[f]) - ds.rule[nf + f]) / ds.rule[2 * nf + f];
    }
    score += ds.rule[3 * nf + std::size_t(s.values[nf])];
    score += ds.rule[3 * nf + 3 + std::size_t(s.values[nf + 1])];
    EXPECT_EQ(s.targets[0].label, score > 0 ? 1 : 0);
    positives += s.targets[0].label;
  }
  EXPECT_GT(positives, 20);
  EXPECT_LT(positives, 180);
  EXPECT_EQ(table_schema(cfg).size(), 6u);
  EXPECT_TRUE(table_schema(cfg)[5].categorical);
}

TEST(Datasets, DeterministicAndDisjointSplits) {
  const auto a = gen_sequence_dataset({});
  const auto b = gen_sequence_dataset({});
  ASSERT_EQ(a.samples.size(), 512u);
  EXPECT_EQ(a.split, 410u);
  EXPECT_EQ(a.size(Split::Train) + a.size(Split::Test), 512u);
  for (std::size_t i = 0; i < a.samples.size(); ++i) EXPECT_EQ(a.samples[i].symbols, b.samples[i].symbols);
  SequenceDataConfig other;
  other.seed = 99;
  EXPECT_NE(gen_sequence_dataset(other).samples[0].symbols, a.samples[0].symbols);
  EXPECT_EQ(a.view(Split::Test).data(), a.view(Split::Train).data() + a.split);
}

TEST(Datasets, GeneratorsRejectBadConfigs) {
  GridDataConfig g;
  g.patch = 5;
  EXPECT_THROW(gen_grid_dataset(g), std::invalid_argument);
  SequenceDataConfig s;
  s.vocab = 4;
  EXPECT_THROW(gen_sequence_dataset(s), std::invalid_argument);
  SetDataConfig p;
  p.classes = 1;
  EXPECT_THROW(gen_set_dataset(p), std::invalid_argument);
}

TEST(BatchIterator, EachEpochIsAPermutation) {
  BatchIterator it(10, 4, 5);
  EXPECT_EQ(it.batches_per_epoch(), 3u);
  for (int epoch = 0; epoch < 3; ++epoch) {
    std::multiset<std::size_t> seen;
    for (int b = 0; b < 3; ++b) {
      const auto batch = it.next();
      EXPECT_EQ(batch.size(), b < 2 ? 4u : 2u);
      seen.insert(batch.begin(), batch.end());
    }
    EXPECT_EQ(seen, (std::multiset<std::size_t>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9}));
  }
}

TEST(BatchIterator, SameSeedSameOrderAndOversizeBatchThrows) {
  BatchIterator a(20, 5, 1), b(20, 5, 1), c(20, 5, 2);
  const auto fa = a.next();
  EXPECT_EQ(fa, b.next());
  EXPECT_NE(fa, c.next());
  EXPECT_THROW(BatchIterator(3, 4, 0), std::invalid_argument);
  EXPECT_THROW(iterate(gen_table_dataset({}), Split::Test, 41, 0), std::invalid_argument);
}

TEST(DrawCursor, NoRepeatUntilExhaustedAndRestore) {
  DrawCursor cur(7);
  Rng rng(3);
  const auto first = cur.draw(7, rng);
  EXPECT_EQ(std::set<std::size_t>(first.begin(), first.end()).size(), 7u);
  cur.draw(3, rng);
  DrawCursor copy(7);
  copy.restore(cur.order(), cur.position());
  Rng r1(8), r2(8);
  EXPECT_EQ(cur.draw(9, r1), copy.draw(9, r2));
  EXPECT_THROW(copy.restore({0, 1}, 0), std::invalid_argument);
}

}  // namespace
}  // namespace ow
