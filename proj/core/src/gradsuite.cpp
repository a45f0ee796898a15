#include "ow/gradsuite.hpp"

#include <random>

#include "ow/ops.hpp"
#include "ow/pretrain.hpp"
#include "ow/trainer.hpp"

namespace ow {

namespace {

struct MiniData {
  std::vector<SyntheticDataset> datasets;
};

MiniData mini_data(const GradcheckConfig& cfg) {
  MiniData d;
  GridDataConfig g;
  g.n = 8;
  g.height = g.width = 8;
  g.patch = 4;
  g.classes = 4;
  g.seed = cfg.seed + 1;
  d.datasets.push_back(gen_grid_dataset(g));
  SequenceDataConfig s;
  s.n = 8;
  s.length = 6;
  s.vocab = 5;
  s.classes = 2;
  s.motif_length = 2;
  s.seed = cfg.seed + 2;
  d.datasets.push_back(gen_sequence_dataset(s));
  SetDataConfig p;
  p.n = 8;
  p.points = 16;
  p.classes = 3;
  p.seed = cfg.seed + 3;
  d.datasets.push_back(gen_set_dataset(p));
  return d;
}

std::vector<const Sample*> first(const SyntheticDataset& ds, std::size_t k, std::size_t offset = 0) {
  std::vector<const Sample*> out;
  const auto train = ds.view(Split::Train);
  for (std::size_t i = 0; i < k; ++i) out.push_back(&train[(offset + i) % train.size()]);
  return out;
}

template <typename Fn>
GradCheckReport check(const ModelBundle<double>& bundle, Fn&& loss, const GradcheckConfig& cfg,
                      const std::function<bool(std::string_view)>& keep) {
  auto params = bundle.parameters(keep);
  for (auto& p : bundle.parameters()) p.tensor.clear_grad();
  auto report = check_gradients<double>(std::function<Tensor<double>()>(loss), std::span<NamedTensor<double>>(params),
                                        cfg.h, cfg.tolerance);
  for (auto& p : bundle.parameters()) p.tensor.clear_grad();
  return report;
}

}  // namespace

ModelDims gradcheck_dims(const GradcheckConfig& cfg) {
  ModelDims d;
  d.d_tok = cfg.d_tok;
  d.d_red = cfg.d_red;
  d.heads = cfg.heads;
  d.f_layers = d.g_layers = d.head_layers = d.decoder_layers = cfg.layers;
  d.mlp_ratio = 2;
  return d;
}

ModalityRegistry gradcheck_registry(const GradcheckConfig& cfg) {
  const auto data = mini_data(cfg);
  ModalityRegistry reg(3);
  reg[0].name = "grid";
  reg[0].tokenizer.family = Family::Grid;
  reg[0].tokenizer.height = reg[0].tokenizer.width = 8;
  reg[0].tokenizer.patch = 4;
  reg[1].name = "sequence";
  reg[1].tokenizer.family = Family::Sequence;
  reg[1].tokenizer.length = 6;
  reg[1].tokenizer.vocab = 5;
  reg[2].name = "set";
  reg[2].tokenizer.family = Family::Set;
  reg[2].tokenizer.points = 16;
  reg[2].tokenizer.groups = 4;
  reg[2].tokenizer.group_size = 4;
  for (std::size_t m = 0; m < 3; ++m) {
    reg[m].tokenizer.d_tok = cfg.d_tok;
    reg[m].tasks = data.datasets[m].tasks;
  }
  reg[1].tasks.resize(1);  // motif only
  for (std::size_t m = 0; m < 3; ++m) {
    for (std::size_t t = 0; t < reg[m].tasks.size(); ++t) {
      reg[m].tasks[t].modality = m;
      reg[m].tasks[t].task = t;
    }
  }
  return reg;
}

std::vector<StageGradReport> gradient_suite(const GradcheckConfig& cfg) {
  const auto data = mini_data(cfg);
  ModelBundle<double> bundle(gradcheck_registry(cfg), gradcheck_dims(cfg), cfg.seed);
  // Cross-attention output projections start at zero; give them values so
  // every cross-attention parameter carries gradient.
  {
    Rng rng = derive_rng(cfg.seed, {9});
    std::normal_distribution<double> noise(0.0, 0.2);
    for (auto* w : {&bundle.a_mid.output().weight, &bundle.a_out.output().weight}) {
      for (auto& v : w->mutable_values()) v = noise(rng);
    }
  }
  MaskingConfig masking;
  std::vector<StageGradReport> out;
  const std::size_t b = 2;

  {
    bundle.add_decoders(1);
    Rng rng = derive_rng(cfg.seed, {1});
    std::vector<std::vector<const Sample*>> samples;
    std::vector<MaskedBatch<double>> batches;
    for (std::size_t m = 0; m < 3; ++m) samples.push_back(first(data.datasets[m], b));
    for (std::size_t m = 0; m < 3; ++m) {
      batches.push_back(prepare_masked(bundle, m, std::span<const Sample* const>(samples[m]), masking, rng));
    }
    auto loss = [&] {
      Tensor<double> total = stage1_loss(bundle, batches[0]);
      for (std::size_t m = 1; m < 3; ++m) total = add(total, stage1_loss(bundle, batches[m]));
      return total;
    };
    auto keep = [](std::string_view g) { return g.rfind("tok.", 0) == 0 || g == "f.stack" || g.rfind("dec1.", 0) == 0; };
    out.push_back({"stage1", check(bundle, loss, cfg, keep)});
    bundle.discard_decoders(1);
  }
  {
    bundle.add_decoders(2);
    Rng rng = derive_rng(cfg.seed, {2});
    std::vector<std::vector<const Sample*>> samples;
    for (std::size_t m = 0; m < 3; ++m) samples.push_back(first(data.datasets[m], b, 2));
    std::vector<MaskedBatch<double>> batches;
    for (std::size_t m = 0; m < 3; ++m) {
      batches.push_back(prepare_masked(bundle, m, std::span<const Sample* const>(samples[m]), masking, rng));
    }
    auto loss = [&] {
      const auto a = stage2_loss(bundle, batches[0], batches[1]);
      const auto c = stage2_loss(bundle, batches[1], batches[2]);
      return add(a.total, c.total);
    };
    auto keep = [](std::string_view g) { return g.rfind("head.", 0) != 0; };
    out.push_back({"stage2", check(bundle, loss, cfg, keep)});
    bundle.discard_decoders(2);
  }
  {
    const auto& reg = bundle.registry();
    PairBatch p1{reg[0].tasks[0], reg[1].tasks[0], {}, {}, first(data.datasets[0], b, 4), first(data.datasets[1], b, 4)};
    PairBatch p2{reg[0].tasks[1], reg[2].tasks[0], {}, {}, first(data.datasets[0], b, 1), first(data.datasets[2], b, 1)};
    auto loss = [&] {
      const auto a = stage3_loss(bundle, p1, 1.25, 0.75);
      const auto c = stage3_loss(bundle, p2, 1.0, 1.0);
      return add(a.total, c.total);
    };
    auto keep = [](std::string_view) { return true; };
    out.push_back({"stage3", check(bundle, loss, cfg, keep)});
  }
  return out;
}

}  // namespace ow
