#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

#include "ow/errors.hpp"
#include "ow/gradsuite.hpp"
#include "ow/ops.hpp"
#include "ow/trainer.hpp"

namespace ow {
namespace {

using Td = Tensor<double>;

std::vector<SyntheticDataset> mini_data(std::size_t n = 24) {
  std::vector<SyntheticDataset> out;
  GridDataConfig gd;
  gd.n = n;
  gd.height = gd.width = 8;
  gd.patch = 4;
  out.push_back(gen_grid_dataset(gd));
  SequenceDataConfig sd;
  sd.n = n;
  sd.length = 6;
  sd.vocab = 5;
  sd.classes = 2;
  sd.motif_length = 2;
  out.push_back(gen_sequence_dataset(sd));
  SetDataConfig pd;
  pd.n = n;
  pd.points = 16;
  out.push_back(gen_set_dataset(pd));
  return out;
}

ModelBundle<double> mini_bundle(std::uint64_t seed = 5) {
  GradcheckConfig g;
  return ModelBundle<double>(gradcheck_registry(g), gradcheck_dims(g), seed);
}

ModalityRegistry counted_registry(std::initializer_list<std::size_t> counts) {
  ModalityRegistry reg;
  for (std::size_t c : counts) {
    ModalitySpec m;
    m.name = "m" + std::to_string(reg.size());
    for (std::size_t t = 0; t < c; ++t) m.tasks.push_back(TaskSpec::classification("t" + std::to_string(t), 2));
    reg.push_back(m);
  }
  return reg;
}

TEST(SamplePair, TwoModalitiesAlwaysSamePair) {
  const auto reg = counted_registry({1, 1});
  Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    const auto [q, r] = sample_pair(rng, reg);
    EXPECT_EQ(q.modality, 0u);
    EXPECT_EQ(r.modality, 1u);
  }
  EXPECT_THROW(sample_pair(rng, counted_registry({2})), std::invalid_argument);
  EXPECT_THROW(sample_pair(rng, counted_registry({2, 0})), std::invalid_argument);
}

TEST(SamplePair, TaskChoiceIsUniformWithinModality) {
  const auto reg = counted_registry({1, 2, 1});
  Rng rng(2);
  std::size_t m1 = 0, second = 0;
  for (int i = 0; i < 20000; ++i) {
    const auto [q, r] = sample_pair(rng, reg);
    ASSERT_NE(q.modality, r.modality);
    for (const auto& t : {q, r}) {
      if (t.modality == 1) {
        ++m1;
        second += t.task == 1;
      }
    }
  }
  const double p = double(second) / double(m1);
  EXPECT_NEAR(p, 0.5, 3.0 * std::sqrt(0.25 / double(m1)));
  // two of the three pairs contain modality 1
  EXPECT_NEAR(double(m1) / 20000.0, 2.0 / 3.0, 0.02);
}

TEST(SamplePair, EveryTaskVisitedInLongRun) {
  const auto reg = counted_registry({2, 2, 2});
  Rng rng(3);
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (int i = 0; i < 1000; ++i) {
    const auto [q, r] = sample_pair(rng, reg);
    seen.insert({q.modality, q.task});
    seen.insert({r.modality, r.task});
  }
  EXPECT_EQ(seen.size(), 6u);
}

TEST(ComposeBatch, HalfFromEachTask) {
  const auto data = mini_data();
  const auto reg = gradcheck_registry(GradcheckConfig{});
  std::map<TaskKey, DrawCursor> cursors;
  Rng rng(4);
  const auto b = compose_batch(reg[0].tasks[0], reg[2].tasks[0], data, 8, cursors, rng);
  EXPECT_EQ(b.samples_q.size(), 4u);
  EXPECT_EQ(b.samples_r.size(), 4u);
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_LT(b.indices_q[k], data[0].split);
    EXPECT_EQ(b.samples_q[k], &data[0].samples[b.indices_q[k]]);
    EXPECT_EQ(b.samples_r[k], &data[2].samples[b.indices_r[k]]);
  }
  EXPECT_THROW(compose_batch(reg[0].tasks[0], reg[2].tasks[0], data, 7, cursors, rng), ConfigError);
  EXPECT_THROW(compose_batch(reg[0].tasks[0], reg[2].tasks[0], data, 0, cursors, rng), ConfigError);
}

TEST(ComposeBatch, SmallPoolWrapsWithoutEarlyRepeats) {
  auto data = mini_data();
  data[0].split = 3;
  const auto reg = gradcheck_registry(GradcheckConfig{});
  std::map<TaskKey, DrawCursor> cursors;
  Rng rng(5);
  const auto b = compose_batch(reg[0].tasks[0], reg[2].tasks[0], data, 8, cursors, rng);
  ASSERT_EQ(b.indices_q.size(), 4u);
  std::set<std::size_t> head(b.indices_q.begin(), b.indices_q.begin() + 3);
  EXPECT_EQ(head, (std::set<std::size_t>{0, 1, 2}));
  EXPECT_LT(b.indices_q[3], 3u);
}

TEST(ComposeBatch, LabelFractionRestrictsPool) {
  EXPECT_EQ(labeled_count(200, 0.1), 20u);
  EXPECT_EQ(labeled_count(5, 0.01), 1u);
  EXPECT_THROW(labeled_count(10, 0.0), std::invalid_argument);
  const auto data = mini_data(40);
  const auto reg = gradcheck_registry(GradcheckConfig{});
  std::map<TaskKey, DrawCursor> cursors;
  Rng rng(6);
  const std::size_t pool = labeled_count(data[0].split, 0.25);
  for (int i = 0; i < 20; ++i) {
    const auto b = compose_batch(reg[0].tasks[0], reg[1].tasks[0], data, 4, cursors, rng, 0.25);
    for (auto idx : b.indices_q) EXPECT_LT(idx, pool);
  }
}

TEST(Balancer, ColdStartAndSymmetry) {
  LossBalancer bal;
  const TaskKey a{0, 0}, b{1, 0};
  EXPECT_EQ(bal.weights(a, b), std::make_pair(1.0, 1.0));
  bal.set_history(a, {2.0, 1.0});
  bal.set_history(b, {4.0, 2.0});
  const auto [wa, wb] = bal.weights(a, b);
  EXPECT_DOUBLE_EQ(wa, 1.0);
  EXPECT_DOUBLE_EQ(wb, 1.0);
}

TEST(Balancer, SlowerTaskGetsMoreWeight) {
  LossBalancer bal;
  const TaskKey a{0, 0}, b{1, 0};
  bal.set_history(a, {1.0, 1.0});
  bal.set_history(b, {1.0, 0.5});
  const auto [wa, wb] = bal.weights(a, b);
  EXPECT_NEAR(wa, 4.0 / 3.0, 1e-15);
  EXPECT_NEAR(wb, 2.0 / 3.0, 1e-15);
  EXPECT_DOUBLE_EQ(bal.ratio(b), 0.5);
}

TEST(Balancer, GammaZeroGivesUnitWeights) {
  BalancerConfig c;
  c.gamma = 0.0;
  LossBalancer bal(c);
  bal.set_history({0, 0}, {1.0, 3.0});
  bal.set_history({1, 0}, {1.0, 0.1});
  EXPECT_EQ(bal.weights({0, 0}, {1, 0}), std::make_pair(1.0, 1.0));
}

TEST(Balancer, BoundsSumAndMonotonicity) {
  LossBalancer bal;
  const TaskKey a{0, 0}, b{1, 0};
  bal.set_history(b, {1.0, 0.8});
  double prev = 0.0;
  for (double rho = 0.05; rho < 30.0; rho *= 1.3) {
    bal.set_history(a, {1.0, rho});
    const auto [wa, wb] = bal.weights(a, b);
    EXPECT_NEAR(wa + wb, 2.0, 1e-12);
    EXPECT_GE(wa, 0.2);
    EXPECT_LE(wa, 5.0);
    EXPECT_GE(wb, 0.2);
    EXPECT_GE(wa, prev);
    if (rho > 0.25 && rho < 3.0) EXPECT_GT(wa, prev);
    prev = wa;
  }
}

TEST(Balancer, EpochMeansAndErrors) {
  BalancerConfig c;
  c.epoch_steps = 4;
  LossBalancer bal(c);
  const TaskKey a{0, 0};
  for (int s = 0; s < 4; ++s) {
    if (s % 2 == 0) bal.record(a, 1.0 + s);
    bal.end_step();
  }
  ASSERT_EQ(bal.history(a), std::vector<double>({2.0}));
  for (int s = 0; s < 8; ++s) {
    bal.record(a, 0.5);
    bal.end_step();
  }
  EXPECT_EQ(bal.history(a), std::vector<double>({0.5, 0.5}));
  EXPECT_THROW(bal.record(a, std::nan("")), NumericError);
  bal.set_history(a, {1.0, 0.0});
  EXPECT_THROW(bal.weights(a, {1, 0}), NumericError);

  LossBalancer rt = LossBalancer::from_json(bal.to_json(), c);
  EXPECT_EQ(rt.history(a), bal.history(a));
  BalancerConfig bad;
  bad.floor = 0.0;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Stage3, UnitWeightsGiveExactSum) {
  auto bundle = mini_bundle();
  const auto data = mini_data();
  std::map<TaskKey, DrawCursor> cursors;
  Rng rng(7);
  const auto& reg = bundle.registry();
  const auto b = compose_batch(reg[0].tasks[0], reg[1].tasks[0], data, 4, cursors, rng);
  const auto w = stage3_loss(bundle, b, 1.0, 1.0);
  const auto u = stage3_loss(bundle, b, 3.0, 0.5, false);
  EXPECT_EQ(w.total.item(), w.loss_q.item() + w.loss_r.item());
  EXPECT_EQ(u.total.item(), w.total.item());
}

TEST(Stage3, WeightScalesTaskGradient) {
  auto bundle = mini_bundle();
  const auto data = mini_data();
  std::map<TaskKey, DrawCursor> cursors;
  Rng rng(8);
  const auto& reg = bundle.registry();
  const auto b = compose_batch(reg[0].tasks[1], reg[2].tasks[0], data, 4, cursors, rng);
  const auto params = stage3_parameters(bundle, b.q, b.r);
  auto grads = [&](double wq, double wr) {
    for (const auto& p : params) Td(p.tensor).clear_grad();
    stage3_loss(bundle, b, wq, wr).total.backward();
    std::map<std::string, std::vector<double>> g;
    for (const auto& p : params) {
      if (p.tensor.has_grad()) g[p.name].assign(p.tensor.grad().begin(), p.tensor.grad().end());
    }
    return g;
  };
  const auto g11 = grads(1, 1), g21 = grads(2, 1), g10 = grads(1, 0);
  std::size_t checked = 0;
  for (const auto& [name, v] : g11) {
    const auto& v2 = g21.at(name);
    const auto& vq = g10.at(name);
    for (std::size_t k = 0; k < v.size(); ++k) {
      EXPECT_NEAR(v2[k] - v[k], vq[k], 1e-10 * (1.0 + std::abs(v2[k]))) << name;
      ++checked;
    }
  }
  EXPECT_GT(checked, 100u);
  const std::string hq = "head.grid.occupancy";
  for (const auto& [name, v] : g11) {
    if (parameter_group(name) != hq) continue;
    for (std::size_t k = 0; k < v.size(); ++k) EXPECT_EQ(g21.at(name)[k], 2.0 * v[k]);
  }
}

TEST(Stage3, ToyRunFiniteAndDeterministic) {
  const auto data = mini_data();
  Stage3Config cfg;
  cfg.batch = 4;
  cfg.balancer.epoch_steps = 10;
  auto run = [&](std::size_t steps) {
    auto bundle = mini_bundle();
    TrainState state;
    state.balancer = LossBalancer(cfg.balancer);
    Optimizer<double> opt(cfg.optimizer);
    return train_loop(bundle, data, cfg, 21, state, opt, steps);
  };
  const auto a = run(100);
  ASSERT_EQ(a.size(), 100u);
  for (const auto& s : a) {
    ASSERT_TRUE(std::isfinite(s.total)) << s.step;
    EXPECT_NEAR(s.w_q + s.w_r, 2.0, 1e-12);
  }
  const auto b = run(30);
  for (std::size_t i = 0; i < b.size(); ++i) {
    EXPECT_EQ(a[i].q.modality, b[i].q.modality);
    EXPECT_EQ(a[i].r.task, b[i].r.task);
    EXPECT_EQ(a[i].total, b[i].total);
  }
}

TEST(Evaluate, PerfectAndRandomPredictors) {
  const auto bundle = mini_bundle();
  auto data = mini_data(200);
  const auto& task = bundle.registry()[2].tasks[0];
  // Relabel with the model's own argmax: a perfect predictor by construction.
  std::vector<const Sample*> test;
  for (std::size_t i = data[2].split; i < data[2].samples.size(); ++i) test.push_back(&data[2].samples[i]);
  Td logits;
  {
    NoGradGuard ng;
    logits = forward_inference(bundle, bundle.tokenizer(2).tokenize(std::span<const Sample* const>(test)), task);
  }
  const std::size_t k = task.classes;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto row = logits.values().subspan(i * k, k);
    data[2].samples[data[2].split + i].targets[0].label =
        int(std::max_element(row.begin(), row.end()) - row.begin());
  }
  const auto perfect = evaluate(bundle, task, data[2], Split::Test, 7);
  EXPECT_EQ(perfect.accuracy, 1.0);
  EXPECT_EQ(perfect.value, 1.0);
  EXPECT_EQ(perfect.n, test.size());
  EXPECT_EQ(perfect.metric, "accuracy");

  Rng rng(9);
  std::uniform_int_distribution<int> lab(0, int(k) - 1);
  for (auto& s : data[2].samples) s.targets[0].label = lab(rng);
  const auto rnd = evaluate(bundle, task, data[2], Split::Train);
  const double n = double(rnd.n);
  const double p = 1.0 / double(k);
  EXPECT_NEAR(rnd.accuracy, p, 3.0 * std::sqrt(p * (1 - p) / n));

  auto empty = data[2];
  empty.split = 0;
  EXPECT_THROW(evaluate(bundle, task, empty, Split::Train), std::invalid_argument);
}

TEST(Evaluate, DenseIdenticalTargets) {
  const auto bundle = mini_bundle();
  auto data = mini_data();
  const auto& task = bundle.registry()[0].tasks[1];
  ASSERT_EQ(task.kind, TaskKind::DensePrediction);
  std::vector<const Sample*> train;
  for (std::size_t i = 0; i < data[0].split; ++i) train.push_back(&data[0].samples[i]);
  Td pred;
  {
    NoGradGuard ng;
    pred = forward_inference(bundle, bundle.tokenizer(0).tokenize(std::span<const Sample* const>(train)), task);
  }
  const std::size_t per = pred.values().size() / train.size();
  for (std::size_t i = 0; i < train.size(); ++i) {
    auto& d = data[0].samples[i].targets[1].dense;
    ASSERT_EQ(d.size(), per);
    for (std::size_t c = 0; c < per; ++c) d[c] = float(pred.values()[i * per + c]);
  }
  const auto rep = evaluate(bundle, task, data[0], Split::Train);
  EXPECT_EQ(rep.metric, "l2");
  EXPECT_LT(rep.l2, 1e-12);
  EXPECT_EQ(rep.miou, 1.0);
}

TEST(Evaluate, BinaryMiou) {
  const std::vector<double> t{1, 1, 0, 0};
  EXPECT_EQ(binary_miou(t, t), 1.0);
  const std::vector<double> p{0.9, 0.2, 0.1, 0.3};
  // class 1: 1/2, class 0: 2/3
  EXPECT_NEAR(binary_miou(p, t), (0.5 + 2.0 / 3.0) / 2.0, 1e-15);
  const std::vector<double> zeros{0, 0};
  EXPECT_EQ(binary_miou(zeros, zeros), 1.0);
}

TEST(Adapt, SeparableEmbeddingsReachFullTrainAccuracy) {
  Rng rng(10);
  std::normal_distribution<double> d(0.0, 1.0);
  const std::size_t n = 60, w = 6;
  std::vector<double> x(n * w);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < w; ++c) x[i * w + c] = d(rng);
    y[i] = x[i * w] + 0.5 * x[i * w + 1] > 0.0 ? 1 : 0;
    x[i * w] += y[i] ? 0.3 : -0.3;  // margin
  }
  const auto emb = Td::from(Shape{n, w}, x);
  AdaptConfig cfg;
  const auto [adapter, acc] = train_adapter(emb, std::span<const int>(y), 2, cfg);
  EXPECT_EQ(acc, 1.0);
  EXPECT_EQ(adapter_accuracy(adapter, emb, std::span<const int>(y)), 1.0);
}

TEST(Adapt, FrozenBundleAndSampleCount) {
  const auto bundle = mini_bundle();
  TableDataConfig tc;
  tc.n = 250;
  const auto ds = gen_table_dataset(tc);
  TokenizerConfig tok;
  tok.family = Family::Table;
  tok.d_tok = 16;
  tok.fields = table_schema(tc);
  AdaptConfig cfg;
  cfg.epochs = 50;
  const auto before = bundle.checksum();
  const auto rep = adapt_unseen(bundle, ds, tok, 0, cfg);
  EXPECT_EQ(rep.train_pool, 200u);
  EXPECT_EQ(rep.sampled, 20u);
  EXPECT_EQ(rep.test_count, 50u);
  EXPECT_EQ(rep.checksum_before, before);
  EXPECT_EQ(rep.checksum_after, before);
  EXPECT_EQ(bundle.checksum(), before);
  cfg.fraction = 0.0;
  EXPECT_THROW(adapt_unseen(bundle, ds, tok, 0, cfg), std::invalid_argument);
  cfg.fraction = 1.5;
  EXPECT_THROW(adapt_unseen(bundle, ds, tok, 0, cfg), std::invalid_argument);
}

}  // namespace
}  // namespace ow
