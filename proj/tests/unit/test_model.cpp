#include <gtest/gtest.h>

#include <set>

#include "ow/config.hpp"
#include "ow/errors.hpp"
#include "ow/gradsuite.hpp"
#include "ow/model.hpp"
#include "ow/ops.hpp"
#include "ow/optim.hpp"

namespace ow {
namespace {

using Td = Tensor<double>;

struct Mini {
  GradcheckConfig cfg;
  std::vector<SyntheticDataset> data;
  ModelBundle<double> bundle;

  explicit Mini(std::uint64_t seed = 5)
      : data(make_data()), bundle(gradcheck_registry(cfg), gradcheck_dims(cfg), seed) {}

  static std::vector<SyntheticDataset> make_data() {
    std::vector<SyntheticDataset> out;
    GridDataConfig gd;
    gd.n = 16;
    gd.height = gd.width = 8;
    gd.classes = 4;
    gd.patch = 4;
    out.push_back(gen_grid_dataset(gd));
    SequenceDataConfig sd;
    sd.n = 16;
    sd.length = 6;
    sd.vocab = 5;
    sd.classes = 2;
    sd.motif_length = 2;
    out.push_back(gen_sequence_dataset(sd));
    SetDataConfig pd;
    pd.n = 16;
    pd.points = 16;
    out.push_back(gen_set_dataset(pd));
    return out;
  }

  TokenSequence<double> tokens(std::size_t m, std::size_t count, std::size_t offset = 0) const {
    std::vector<const Sample*> s;
    for (std::size_t i = 0; i < count; ++i) s.push_back(&data[m].samples[offset + i]);
    return bundle.tokenizer(m).tokenize(std::span<const Sample* const>(s));
  }
};

void randomize(Linear<double>& l, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> d(0.0, 0.3);
  for (auto& v : l.weight.mutable_values()) v = d(rng);
  for (auto& v : l.bias.mutable_values()) v = d(rng);
}

bool same_values(const Td& a, const Td& b) {
  return a.shape() == b.shape() && std::equal(a.values().begin(), a.values().end(), b.values().begin());
}

TEST(Layers, StackRejectsIndivisibleHeads) {
  Rng rng(1);
  StackConfig c;
  c.width = 10;
  c.heads = 3;
  c.layers = 1;
  EXPECT_THROW(TransformerStack<double>(c, rng), std::invalid_argument);
}

TEST(Model, FeatureTransformShapeAndDeterminism) {
  ModelDims dims;
  dims.d_tok = 64;
  dims.d_red = 32;
  ModalitySpec m;
  m.name = "grid";
  m.tokenizer.d_tok = 64;  // 16 x 16 grid, patch 4: 16 tokens
  m.tasks = {TaskSpec::classification("class", 4)};
  ModelBundle<double> bundle({m}, dims, 3);
  Sample s;
  s.values.assign(256, 0.0f);
  for (std::size_t i = 0; i < 256; ++i) s.values[i] = float(i % 11);
  const auto x = bundle.tokenizer(0).tokenize(s);
  const auto u = f_transform(bundle, x);
  EXPECT_EQ(u.shape(), (Shape{16, 32}));
  EXPECT_TRUE(same_values(u, f_transform(bundle, x)));

  auto wrong = x;
  wrong.tokens = Td::zeros({16, 8});
  EXPECT_THROW(f_transform(bundle, wrong), ShapeError);
}

TEST(Model, BundleRejectsMismatchedTokenWidth) {
  ModelDims dims;
  ModalitySpec m;
  m.name = "grid";
  m.tokenizer.d_tok = 16;
  EXPECT_THROW(ModelBundle<double>({m}, dims, 1), std::invalid_argument);
}

TEST(Model, CrossAttentionSingleKeyIgnoresKeyContent) {
  Rng rng(3);
  CrossAttention<double> a(8, 6, 2, 1e-5, rng), b(8, 6, 2, 1e-5, rng);
  randomize(a.output(), 10);
  // Same value/output path, different key projections.
  b.value() = a.value();
  b.output() = a.output();
  Rng data(4);
  std::normal_distribution<double> d(0, 1);
  std::vector<double> qv(3 * 8), kv(6);
  for (auto& v : qv) v = d(data);
  for (auto& v : kv) v = d(data);
  const auto q = Td::from({3, 8}, qv);
  const auto k = Td::from({1, 6}, kv);
  std::vector<double> w;
  const auto out_a = cross_attend(q, k, a, 1, &w);
  for (double x : w) EXPECT_EQ(x, 1.0);
  const auto out_b = cross_attend(q, k, b, 1);
  for (std::size_t i = 0; i < out_a.numel(); ++i) EXPECT_NEAR(out_a.values()[i], out_b.values()[i], 1e-12);
  EXPECT_EQ(out_a.shape(), q.shape());
}

TEST(Model, CrossAttentionWeightsSumToOneAndShape) {
  Rng rng(5);
  CrossAttention<double> a(8, 6, 2, 1e-5, rng);
  const auto q = Td::full({2 * 3, 8}, 0.5);
  std::vector<double> kv(2 * 7 * 6);
  for (std::size_t i = 0; i < kv.size(); ++i) kv[i] = std::sin(double(i));
  std::vector<double> w;
  const auto out = cross_attend(q, Td::from({14, 6}, kv), a, 2, &w);
  EXPECT_EQ(out.shape(), (Shape{6, 8}));
  for (std::size_t r = 0; r < w.size() / 7; ++r) {
    double s = 0;
    for (std::size_t j = 0; j < 7; ++j) s += w[r * 7 + j];
    EXPECT_NEAR(s, 1.0, 1e-6);
  }
  EXPECT_THROW(cross_attend(q, Td::zeros({14, 5}), a, 2), ShapeError);
}

TEST(Model, CrossAttentionStartsAsIdentity) {
  Rng rng(6);
  CrossAttention<double> a(8, 6, 2, 1e-5, rng);
  const auto q = Td::full({2, 8}, 0.25);
  EXPECT_TRUE(same_values(a.forward(q, Td::full({3, 6}, 1.0), 1), q));
}

TEST(Model, ForwardPairShapes) {
  Mini mini;
  const auto& reg = mini.bundle.registry();
  const auto xi = mini.tokens(0, 2), xj = mini.tokens(2, 2);
  const auto pred = forward_pair(mini.bundle, xi, xj, reg[0].tasks[0], reg[2].tasks[0]);
  const auto d_red = mini.bundle.dims().d_red;
  EXPECT_EQ(pred.trunk.fused.rows(), 2 * (xi.count + xj.count));
  EXPECT_EQ(pred.trunk.xhat.cols(), d_red);
  EXPECT_EQ(pred.trunk.out_i.shape(), (Shape{2 * xi.count, d_red}));
  EXPECT_EQ(pred.trunk.out_j.shape(), (Shape{2 * xj.count, d_red}));
  EXPECT_EQ(pred.pred_q.shape(), (Shape{2, reg[0].tasks[0].classes}));
  EXPECT_EQ(pred.pred_r.shape(), (Shape{2, reg[2].tasks[0].classes}));
  const auto dense = forward_pair(mini.bundle, xi, xj, reg[0].tasks[1], reg[2].tasks[0]);
  EXPECT_EQ(dense.pred_q.shape(), (Shape{2 * xi.count, 1}));
  EXPECT_THROW(forward_pair(mini.bundle, xj, xi, reg[0].tasks[0], reg[2].tasks[0]), std::invalid_argument);
}

TEST(Model, InterleaveRows) {
  EXPECT_EQ(interleave_rows(2, 2, 1), (std::vector<std::size_t>{0, 1, 4, 2, 3, 5}));
}

TEST(Model, ZeroedOutputFusionGivesXhatHalves) {
  Mini mini;
  randomize(mini.bundle.a_out.output(), 7);
  for (auto* l : {&mini.bundle.a_out.value()}) {
    std::ranges::fill(l->weight.mutable_values(), 0.0);
    std::ranges::fill(l->bias.mutable_values(), 0.0);
  }
  std::ranges::fill(mini.bundle.a_out.output().bias.mutable_values(), 0.0);
  const auto trunk = forward_trunk(mini.bundle, mini.tokens(0, 2), mini.tokens(1, 2));
  EXPECT_TRUE(same_values(trunk.out_i, trunk.xhat_i));
  EXPECT_TRUE(same_values(trunk.out_j, trunk.xhat_j));
  const auto skipped = forward_trunk(mini.bundle, mini.tokens(0, 2), mini.tokens(1, 2), false);
  EXPECT_TRUE(same_values(skipped.out_i, skipped.xhat_i));
}

TEST(Model, InferenceIsHeadOfBackboneAndDeterministic) {
  Mini mini;
  const auto& t = mini.bundle.task(1, 0);
  const auto x = mini.tokens(1, 3);
  const auto a = forward_inference(mini.bundle, x, t);
  const auto manual = mini.bundle.head(t).forward(mini.bundle.g.forward(f_transform(mini.bundle, x), 3), 3);
  EXPECT_TRUE(same_values(a, manual));
  EXPECT_TRUE(same_values(a, forward_inference(mini.bundle, x, t)));
  EXPECT_EQ(a.shape(), (Shape{3, t.classes}));
  EXPECT_EQ(embed(mini.bundle, x).shape(), (Shape{3, mini.bundle.dims().d_red}));
  EXPECT_THROW(forward_inference(mini.bundle, x, mini.bundle.task(0, 0)), std::invalid_argument);
  EXPECT_THROW(head_forward(mini.bundle, Td::zeros({4, 3}), t, 1), ShapeError);
}

TEST(Model, ClassificationHeadIsPermutationInvariant) {
  ModelDims dims;
  dims.d_red = 8;
  dims.head_layers = 1;
  Rng rng(8);
  TaskHead<double> head(TaskSpec::classification("c", 4), dims, rng);
  std::vector<double> v(5 * 8);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::cos(0.7 * double(i));
  std::vector<double> perm;
  for (std::size_t r : {3, 0, 4, 1, 2}) perm.insert(perm.end(), v.begin() + r * 8, v.begin() + r * 8 + 8);
  const auto a = head.forward(Td::from({5, 8}, v), 1), b = head.forward(Td::from({5, 8}, perm), 1);
  ASSERT_EQ(a.shape(), (Shape{1, 4}));
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(a.values()[i], b.values()[i], 1e-12);
  TaskHead<double> dense(TaskSpec::dense("d", 3), dims, rng);
  EXPECT_EQ(dense.forward(Td::from({5, 8}, v), 1).shape(), (Shape{5, 3}));
}

TEST(Model, PairLossReachesEveryActiveParameter) {
  Mini mini;
  const auto& reg = mini.bundle.registry();
  const auto pred = forward_pair(mini.bundle, mini.tokens(0, 2), mini.tokens(1, 2), reg[0].tasks[0], reg[1].tasks[0]);
  const int lq[] = {0, 1}, lr[] = {1, 0};
  add(cross_entropy(pred.pred_q, std::span<const int>(lq)), cross_entropy(pred.pred_r, std::span<const int>(lr)))
      .backward();
  std::set<std::string> reached;
  for (const auto& p : mini.bundle.parameters()) {
    if (!p.tensor.has_grad()) continue;
    for (double g : p.tensor.grad()) ASSERT_TRUE(std::isfinite(g)) << p.name;
    reached.insert(parameter_group(p.name));
  }
  const std::set<std::string> want{"tok.grid", "tok.sequence", "f.stack", "f.fc", "a_mid", "a_out",
                                   "g",        "head.grid.class", "head.sequence.motif"};
  EXPECT_EQ(reached, want);
  for (const auto& p : mini.bundle.parameters()) {
    if (want.count(parameter_group(p.name))) EXPECT_TRUE(p.tensor.has_grad()) << p.name;
  }
}

TEST(Model, ParameterGroupsAndChecksum) {
  Mini mini;
  std::set<std::string> groups;
  for (const auto& p : mini.bundle.parameters()) groups.insert(parameter_group(p.name));
  const std::set<std::string> want{"tok.grid", "tok.sequence", "tok.set", "f.stack", "f.fc", "a_mid", "a_out", "g",
                                   "head.grid.class", "head.grid.occupancy", "head.sequence.motif",
                                   "head.set.shape"};
  EXPECT_EQ(groups, want);

  const auto before = mini.bundle.checksum();
  mini.bundle.add_decoders(1);
  EXPECT_TRUE(mini.bundle.has_decoders(1));
  EXPECT_EQ(mini.bundle.checksum(), before);
  mini.bundle.discard_decoders(1);
  EXPECT_THROW(mini.bundle.decoder(1, 0), std::logic_error);
  auto p = mini.bundle.parameters().front().tensor;
  p.mutable_values()[0] += 1e-6;
  EXPECT_NE(mini.bundle.checksum(), before);
  TaskSpec unknown = mini.bundle.task(0, 0);
  unknown.task = 9;
  EXPECT_THROW(mini.bundle.head(unknown), std::invalid_argument);
}

TEST(Model, SameSeedSameParameters) {
  Mini a(11), b(11), c(12);
  EXPECT_EQ(a.bundle.checksum(), b.bundle.checksum());
  EXPECT_NE(a.bundle.checksum(), c.bundle.checksum());
}

TEST(Model, OverfitsOneLabeledSample) {
  Mini mini;
  const auto& t = mini.bundle.task(2, 0);
  const auto x = mini.tokens(2, 1);
  const int label[] = {mini.data[2].samples[0].targets[0].label};
  OptimizerConfig oc;
  oc.lr = 1e-2;
  Optimizer<double> opt(oc);
  for (int step = 0; step < 40; ++step) {
    cross_entropy(forward_inference(mini.bundle, x, t), std::span<const int>(label)).backward();
    std::vector<NamedTensor<double>> active;
    for (auto& p : mini.bundle.parameters()) {
      if (p.tensor.has_grad()) active.push_back(p);
    }
    opt.step(active);
  }
  const auto logits = forward_inference(mini.bundle, x, t);
  const auto v = logits.values();
  EXPECT_EQ(int(std::max_element(v.begin(), v.end()) - v.begin()), label[0]);
}

}  // namespace
}  // namespace ow
