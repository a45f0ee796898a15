#include "ow/pretrain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "json.hpp"
#include "ow/errors.hpp"
#include "ow/ops.hpp"

namespace ow {

std::size_t mask_count(std::size_t n, double ratio) {
  if (!(ratio >= 0.0) || ratio >= 1.0) {
    throw std::invalid_argument("mask ratio must lie in [0, 1), got " + std::to_string(ratio));
  }
  if (ratio == 0.0 || n == 0) return 0;
  if (n == 1) throw std::invalid_argument("cannot mask a single token and keep one visible");
  const auto k = static_cast<std::size_t>(std::lround(ratio * double(n)));
  return std::clamp<std::size_t>(k, 1, n - 1);
}

CorruptionSplit corruption_split(std::size_t selected) {
  CorruptionSplit s;
  s.keep = static_cast<std::size_t>(std::lround(0.1 * double(selected)));
  s.random = static_cast<std::size_t>(std::lround(0.1 * double(selected)));
  s.mask = selected - s.keep - s.random;
  return s;
}

MaskPlan plan_mask(std::size_t n, double ratio, Family family, Rng& rng) {
  const std::size_t k = mask_count(n, ratio);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t(0));
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<std::pair<std::size_t, Corruption>> picked;
  picked.reserve(k);
  const auto split = corruption_split(k);
  for (std::size_t i = 0; i < k; ++i) {
    Corruption c = Corruption::Mask;
    if (i >= split.mask) c = i < split.mask + split.random ? Corruption::Random : Corruption::Keep;
    picked.emplace_back(order[i], c);
  }
  std::sort(picked.begin(), picked.end());

  MaskPlan plan;
  plan.count = n;
  for (const auto& [idx, c] : picked) {
    plan.masked.push_back(idx);
    if (family == Family::Sequence) plan.corruption.push_back(c);
  }
  std::vector<std::size_t> rest(order.begin() + std::ptrdiff_t(k), order.end());
  std::sort(rest.begin(), rest.end());
  plan.visible = std::move(rest);
  return plan;
}

double mask_ratio(const TokenizerConfig& tokenizer, const MaskingConfig& masking) {
  return tokenizer.symbolic() ? masking.fraction_f : masking.ratio(tokenizer.family);
}

template <typename T>
MaskedBatch<T> prepare_masked(const ModelBundle<T>& bundle, std::size_t modality,
                              std::span<const Sample* const> samples, const MaskingConfig& masking, Rng& rng) {
  const auto& tok = bundle.tokenizer(modality);
  const auto& tc = tok.config();
  if (samples.empty()) throw std::invalid_argument("masked batch needs at least one sample");

  MaskedBatch<T> mb;
  mb.modality = modality;
  mb.count = tc.token_count();
  mb.symbolic = tc.symbolic();
  mb.samples.assign(samples.begin(), samples.end());
  const double ratio = mask_ratio(tc, masking);

  for (std::size_t b = 0; b < samples.size(); ++b) {
    mb.plans.push_back(plan_mask(mb.count, ratio, tc.family, rng));
    for (std::size_t slot : mb.plans.back().masked) mb.target_rows.push_back(b * mb.count + slot);
  }
  if (mb.target_rows.empty()) throw std::invalid_argument("masking selected no tokens; ratio is zero");

  if (mb.symbolic) {
    std::uniform_int_distribution<int> random_symbol(0, int(tc.vocab) - 1);
    const int mask_id = int(tc.vocab);
    for (std::size_t b = 0; b < samples.size(); ++b) {
      const auto& ids = samples[b]->symbols;
      if (ids.size() != tc.length) throw ShapeError("symbol sequence length differs from configured length");
      mb.target_ids.insert(mb.target_ids.end(), ids.begin(), ids.end());
      auto corrupted = ids;
      const auto& plan = mb.plans[b];
      for (std::size_t i = 0; i < plan.masked.size(); ++i) {
        switch (plan.corruption[i]) {
          case Corruption::Mask: corrupted[plan.masked[i]] = mask_id; break;
          case Corruption::Random: corrupted[plan.masked[i]] = random_symbol(rng); break;
          case Corruption::Keep: break;
        }
      }
      mb.corrupted.push_back(std::move(corrupted));
    }
  } else {
    mb.targets = tok.raw_tokens(samples);
  }
  return mb;
}

template <typename T>
EncoderView<T> encoder_view(const ModelBundle<T>& bundle, const MaskedBatch<T>& mb) {
  const auto& tok = bundle.tokenizer(mb.modality);
  EncoderView<T> view;
  if (mb.symbolic) {
    const auto* seq_tok = dynamic_cast<const SequenceTokenizer<T>*>(&tok);
    if (seq_tok == nullptr) throw std::logic_error("symbolic masking needs a sequence tokenizer");
    view.seq = seq_tok->embed_symbols(mb.corrupted);
    view.positions = view.seq.positions;
    std::vector<std::size_t> all(mb.count);
    std::iota(all.begin(), all.end(), std::size_t(0));
    view.visible.assign(mb.batch(), all);
    return view;
  }
  const auto full = tok.tokenize(std::span<const Sample* const>(mb.samples));
  std::vector<std::size_t> rows;
  std::size_t visible_count = mb.plans.front().visible.size();
  for (std::size_t b = 0; b < mb.batch(); ++b) {
    const auto& vis = mb.plans[b].visible;
    if (vis.size() != visible_count) throw ShapeError("masked batch samples have unequal visible counts");
    for (std::size_t slot : vis) rows.push_back(b * mb.count + slot);
    view.visible.push_back(vis);
  }
  view.seq.tokens = gather_rows(full.tokens, std::span<const std::size_t>(rows));
  view.seq.positions = gather_rows(full.positions, std::span<const std::size_t>(rows));
  view.seq.modality = mb.modality;
  view.seq.batch = mb.batch();
  view.seq.count = visible_count;
  view.positions = full.positions;
  return view;
}

template <typename T>
Tensor<T> reconstruction_loss(const Tensor<T>& pred, const MaskedBatch<T>& mb) {
  const auto rows = std::span<const std::size_t>(mb.target_rows);
  const auto picked = gather_rows(pred, rows);
  if (mb.symbolic) {
    std::vector<int> labels;
    labels.reserve(rows.size());
    for (std::size_t r : rows) labels.push_back(mb.target_ids[r]);
    return cross_entropy(picked, std::span<const int>(labels));
  }
  return l2_loss(picked, gather_rows(mb.targets, rows));
}

template <typename T>
Tensor<T> stage1_loss(const ModelBundle<T>& bundle, const MaskedBatch<T>& mb) {
  const auto view = encoder_view(bundle, mb);
  const auto encoded = bundle.f.encode(add(view.seq.tokens, view.seq.positions), view.seq.batch);
  const auto pred = bundle.decoder(1, mb.modality).forward(encoded, view.visible, mb.count, view.positions);
  return reconstruction_loss(pred, mb);
}

template <typename T>
Stage2Loss<T> stage2_loss(const ModelBundle<T>& bundle, const MaskedBatch<T>& mi, const MaskedBatch<T>& mj) {
  if (mi.modality == mj.modality) throw std::invalid_argument("stage 2 needs two distinct modalities");
  const auto vi = encoder_view(bundle, mi);
  const auto vj = encoder_view(bundle, mj);
  const auto trunk = forward_trunk(bundle, vi.seq, vj.seq);
  Stage2Loss<T> out;
  out.loss_i = reconstruction_loss(
      bundle.decoder(2, mi.modality).forward(trunk.out_i, vi.visible, mi.count, vi.positions), mi);
  out.loss_j = reconstruction_loss(
      bundle.decoder(2, mj.modality).forward(trunk.out_j, vj.visible, mj.count, vj.positions), mj);
  out.total = add(out.loss_i, out.loss_j);
  return out;
}

template <typename T>
std::vector<NamedTensor<T>> stage1_parameters(const ModelBundle<T>& bundle, std::size_t modality) {
  const auto& spec = bundle.registry().at(modality);
  const auto tok = ModelBundle<T>::tokenizer_group(spec);
  const auto dec = ModelBundle<T>::decoder_group(1, spec);
  return bundle.parameters([&](std::string_view g) { return g == tok || g == "f.stack" || g == dec; });
}

template <typename T>
std::vector<NamedTensor<T>> stage2_parameters(const ModelBundle<T>& bundle, std::size_t i, std::size_t j) {
  const auto& si = bundle.registry().at(i);
  const auto& sj = bundle.registry().at(j);
  const std::string keep[] = {ModelBundle<T>::tokenizer_group(si), ModelBundle<T>::tokenizer_group(sj),
                              ModelBundle<T>::decoder_group(2, si), ModelBundle<T>::decoder_group(2, sj),
                              "f.stack", "f.fc", "a_mid", "a_out", "g"};
  return bundle.parameters([&](std::string_view g) { return std::find(std::begin(keep), std::end(keep), g) != std::end(keep); });
}

namespace {

template <typename T>
void clear_all_grads(const ModelBundle<T>& bundle) {
  for (auto& p : bundle.parameters()) p.tensor.clear_grad();
}

void require_finite(double loss, const std::string& where) {
  if (!std::isfinite(loss)) throw NumericError(where + ": loss is not finite");
}

std::vector<const Sample*> pick(std::span<const Sample> split, const std::vector<std::size_t>& idx) {
  std::vector<const Sample*> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(&split[i]);
  return out;
}

}  // namespace

template <typename T>
double stage1_step(ModelBundle<T>& bundle, std::size_t modality, std::span<const Sample* const> samples,
                   const MaskingConfig& masking, Optimizer<T>& opt, Rng& rng) {
  const auto mb = prepare_masked(bundle, modality, samples, masking, rng);
  const auto loss = stage1_loss(bundle, mb);
  const double value = double(loss.item());
  require_finite(value, "stage 1");
  loss.backward();
  auto params = stage1_parameters(bundle, modality);
  opt.step(params);
  clear_all_grads(bundle);
  return value;
}

template <typename T>
std::pair<double, double> stage2_step(ModelBundle<T>& bundle, std::size_t i, std::span<const Sample* const> batch_i,
                                      std::size_t j, std::span<const Sample* const> batch_j,
                                      const MaskingConfig& masking, Optimizer<T>& opt, Rng& rng) {
  if (i == j) throw std::invalid_argument("stage 2 needs two distinct modalities");
  const auto mi = prepare_masked(bundle, i, batch_i, masking, rng);
  const auto mj = prepare_masked(bundle, j, batch_j, masking, rng);
  const auto loss = stage2_loss(bundle, mi, mj);
  const double li = double(loss.loss_i.item()), lj = double(loss.loss_j.item());
  require_finite(double(loss.total.item()), "stage 2");
  loss.total.backward();
  auto params = stage2_parameters(bundle, i, j);
  opt.step(params);
  clear_all_grads(bundle);
  return {li, lj};
}

std::pair<std::size_t, std::size_t> sample_modality_pair(std::size_t m, Rng& rng) {
  if (m < 2) throw std::invalid_argument("pair sampling needs at least two modalities, have " + std::to_string(m));
  const std::size_t pairs = m * (m - 1) / 2;
  std::size_t k = std::uniform_int_distribution<std::size_t>(0, pairs - 1)(rng);
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t row = m - 1 - i;
    if (k < row) return {i, i + 1 + k};
    k -= row;
  }
  throw std::logic_error("pair index out of range");
}

template <typename T>
std::vector<StageLogEntry> stage1_loop(ModelBundle<T>& bundle, std::span<const SyntheticDataset> datasets,
                                       const MaskingConfig& masking, const Stage1Config& cfg, std::uint64_t seed,
                                       MetricsWriter* metrics) {
  const std::size_t m_count = bundle.modalities();
  if (m_count == 0) throw std::invalid_argument("stage 1 needs at least one modality");
  if (datasets.size() != m_count) throw std::invalid_argument("stage 1 needs one dataset per modality");
  if (cfg.batch == 0) throw std::invalid_argument("stage 1 batch must be positive");

  std::vector<BatchIterator> iters;
  for (std::size_t m = 0; m < m_count; ++m) {
    const std::size_t n = datasets[m].size(Split::Train);
    const auto it_seed = derive_rng(seed, {1, 0, m})();
    iters.emplace_back(n, std::min(cfg.batch, n), it_seed);
  }

  bundle.add_decoders(1);
  Optimizer<T> opt(cfg.optimizer);
  std::vector<StageLogEntry> log;
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t m = 0; m < m_count; ++m) {
      const auto train = datasets[m].view(Split::Train);
      const std::size_t visits = cfg.batches_per_visit ? cfg.batches_per_visit : iters[m].batches_per_epoch();
      for (std::size_t b = 0; b < visits; ++b) {
        const auto samples = pick(train, iters[m].next());
        Rng rng = derive_rng(seed, {1, 1, step});
        const double loss = stage1_step(bundle, m, std::span<const Sample* const>(samples), masking, opt, rng);
        log.push_back({step, m, m, loss, loss, 0.0});
        if (metrics != nullptr) {
          metrics->write(nlohmann::json{{"stage", 1}, {"step", step}, {"epoch", epoch},
                                        {"modality", bundle.registry()[m].name}, {"loss", loss}}
                             .dump());
        }
        ++step;
      }
    }
  }
  bundle.discard_decoders(1);
  return log;
}

template <typename T>
std::vector<StageLogEntry> stage2_loop(ModelBundle<T>& bundle, std::span<const SyntheticDataset> datasets,
                                       const MaskingConfig& masking, const Stage2Config& cfg, std::uint64_t seed,
                                       MetricsWriter* metrics) {
  const std::size_t m_count = bundle.modalities();
  if (m_count < 2) throw std::invalid_argument("stage 2 needs at least two modalities");
  if (datasets.size() != m_count) throw std::invalid_argument("stage 2 needs one dataset per modality");
  if (cfg.batch < 2 || cfg.batch % 2 != 0) throw std::invalid_argument("stage 2 batch must be even and >= 2");

  std::vector<DrawCursor> cursors;
  for (std::size_t m = 0; m < m_count; ++m) cursors.emplace_back(datasets[m].size(Split::Train));

  bundle.add_decoders(2);
  Optimizer<T> opt(cfg.optimizer);
  std::vector<StageLogEntry> log;
  const std::size_t half = cfg.batch / 2;
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    Rng rng = derive_rng(seed, {2, step});
    const auto [i, j] = sample_modality_pair(m_count, rng);
    const auto si = pick(datasets[i].view(Split::Train), cursors[i].draw(half, rng));
    const auto sj = pick(datasets[j].view(Split::Train), cursors[j].draw(half, rng));
    const auto [li, lj] = stage2_step(bundle, i, std::span<const Sample* const>(si), j,
                                      std::span<const Sample* const>(sj), masking, opt, rng);
    log.push_back({step, i, j, li + lj, li, lj});
    if (metrics != nullptr) {
      const auto& reg = bundle.registry();
      metrics->write(nlohmann::json{{"stage", 2}, {"step", step}, {"pair", {reg[i].name, reg[j].name}},
                                    {"loss_i", li}, {"loss_j", lj}, {"loss", li + lj}}
                         .dump());
    }
  }
  bundle.discard_decoders(2);
  return log;
}

#define OW_INSTANTIATE_PRETRAIN(T)                                                                               \
  template MaskedBatch<T> prepare_masked(const ModelBundle<T>&, std::size_t, std::span<const Sample* const>,     \
                                         const MaskingConfig&, Rng&);                                            \
  template EncoderView<T> encoder_view(const ModelBundle<T>&, const MaskedBatch<T>&);                            \
  template Tensor<T> reconstruction_loss(const Tensor<T>&, const MaskedBatch<T>&);                               \
  template Tensor<T> stage1_loss(const ModelBundle<T>&, const MaskedBatch<T>&);                                  \
  template Stage2Loss<T> stage2_loss(const ModelBundle<T>&, const MaskedBatch<T>&, const MaskedBatch<T>&);       \
  template std::vector<NamedTensor<T>> stage1_parameters(const ModelBundle<T>&, std::size_t);                    \
  template std::vector<NamedTensor<T>> stage2_parameters(const ModelBundle<T>&, std::size_t, std::size_t);       \
  template double stage1_step(ModelBundle<T>&, std::size_t, std::span<const Sample* const>,                      \
                              const MaskingConfig&, Optimizer<T>&, Rng&);                                        \
  template std::pair<double, double> stage2_step(ModelBundle<T>&, std::size_t, std::span<const Sample* const>,   \
                                                 std::size_t, std::span<const Sample* const>,                    \
                                                 const MaskingConfig&, Optimizer<T>&, Rng&);                     \
  template std::vector<StageLogEntry> stage1_loop(ModelBundle<T>&, std::span<const SyntheticDataset>,            \
                                                  const MaskingConfig&, const Stage1Config&, std::uint64_t,      \
                                                  MetricsWriter*);                                               \
  template std::vector<StageLogEntry> stage2_loop(ModelBundle<T>&, std::span<const SyntheticDataset>,            \
                                                  const MaskingConfig&, const Stage2Config&, std::uint64_t,      \
                                                  MetricsWriter*);

OW_INSTANTIATE_PRETRAIN(float)
OW_INSTANTIATE_PRETRAIN(double)

}  // namespace ow
