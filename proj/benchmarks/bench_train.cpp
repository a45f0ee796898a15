#include <benchmark/benchmark.h>

#include "ow/config.hpp"
#include "ow/pretrain.hpp"
#include "ow/trainer.hpp"

namespace {

struct Setup {
  ow::RunConfig config = ow::default_config();
  std::vector<ow::SyntheticDataset> datasets = config.datasets();
};

const Setup& setup() {
  static const Setup s;
  return s;
}

void BM_Stage1Step(benchmark::State& state) {
  const auto& s = setup();
  ow::ModelBundle<float> bundle(s.config.registry(), s.config.model, 1);
  bundle.add_decoders(1);
  ow::Optimizer<float> opt(s.config.stage1.optimizer);
  ow::Rng rng(2);
  const auto modality = std::size_t(state.range(0));
  std::vector<const ow::Sample*> batch;
  for (std::size_t i = 0; i < s.config.stage1.batch; ++i) batch.push_back(&s.datasets[modality].samples[i]);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ow::stage1_step(bundle, modality, std::span<const ow::Sample* const>(batch),
                                             s.config.masking, opt, rng));
  }
}
BENCHMARK(BM_Stage1Step)->Arg(0)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

void BM_Stage3Step(benchmark::State& state) {
  const auto& s = setup();
  ow::ModelBundle<float> bundle(s.config.registry(), s.config.model, 1);
  auto cfg = s.config.stage3;
  ow::TrainState train{0, ow::LossBalancer(cfg.balancer), {}};
  ow::Optimizer<float> opt(cfg.optimizer);
  std::size_t until = 0;
  for (auto _ : state) {
    until += 1;
    ow::train_loop(bundle, std::span<const ow::SyntheticDataset>(s.datasets), cfg, 3, train, opt, until);
  }
}
BENCHMARK(BM_Stage3Step)->Unit(benchmark::kMillisecond);

void BM_EvaluateTask(benchmark::State& state) {
  const auto& s = setup();
  const ow::ModelBundle<float> bundle(s.config.registry(), s.config.model, 1);
  const auto& task = bundle.registry()[0].tasks[0];
  for (auto _ : state) {
    benchmark::DoNotOptimize(ow::evaluate(bundle, task, s.datasets[0], ow::Split::Test).accuracy);
  }
}
BENCHMARK(BM_EvaluateTask)->Unit(benchmark::kMillisecond);

}  // namespace
