#include <gtest/gtest.h>

#include <sstream>

#include "ow/checkpoint.hpp"
#include "ow/errors.hpp"
#include "ow/gradsuite.hpp"

namespace ow {
namespace {

RunConfig small_config() {
  auto c = parse_config(R"({"model": {"d_tok": 16, "d_red": 8, "f_layers": 1, "g_layers": 1,
                            "head_layers": 1, "decoder_layers": 1}})");
  for (auto& m : c.modalities) {
    if (m.name == "grid") m.grid.n = 20;
    if (m.name == "sequence") m.sequence.n = 20;
    if (m.name == "set") m.set.n = 20;
  }
  return c;
}

std::string bytes(const Checkpoint& c) {
  std::ostringstream os;
  write_checkpoint(os, c);
  return os.str();
}

Checkpoint parse(const std::string& b) {
  std::istringstream is(b);
  return read_checkpoint(is);
}

TEST(Checkpoint, RoundTripRestoresParameters) {
  const auto cfg = small_config();
  ModelBundle<float> a(cfg.registry(), cfg.model, 1);
  ModelBundle<float> b(cfg.registry(), cfg.model, 2);
  ASSERT_NE(a.checksum(), b.checksum());
  const auto ck = capture_checkpoint<float>(1, cfg, a);
  const auto back = parse(bytes(ck));
  EXPECT_EQ(back.stage, 1u);
  EXPECT_EQ(back.records.size(), ck.records.size());
  EXPECT_EQ(bytes(back), bytes(ck));
  restore_parameters(b, back);
  EXPECT_EQ(b.checksum(), a.checksum());
  check_compatible(back, cfg);
  EXPECT_NO_THROW(require_stage(back, {1}));
  EXPECT_THROW(require_stage(back, {2, 3}), CheckpointError);
  EXPECT_THROW(restore_train_state(back, cfg.stage3.balancer), CheckpointError);
}

TEST(Checkpoint, OptimizerAndStateRoundTrip) {
  const auto cfg = small_config();
  ModelBundle<double> bundle(cfg.registry(), cfg.model, 1);
  const auto data = cfg.datasets();
  Stage3Config s3 = cfg.stage3;
  s3.batch = 4;
  s3.balancer.epoch_steps = 2;
  TrainState state;
  state.balancer = LossBalancer(s3.balancer);
  Optimizer<double> opt(s3.optimizer);
  train_loop(bundle, data, s3, 5, state, opt, 5);
  const auto ck = parse(bytes(capture_checkpoint<double>(3, cfg, bundle, &opt, &state)));

  ModelBundle<double> bundle2(cfg.registry(), cfg.model, 99);
  restore_parameters(bundle2, ck);
  Optimizer<double> opt2(s3.optimizer);
  restore_optimizer(opt2, ck);
  auto state2 = restore_train_state(ck, s3.balancer);
  EXPECT_EQ(state2.step, 5u);
  EXPECT_EQ(state2.to_json(), state.to_json());

  // Float storage: continue both from the restored copy to compare bitwise.
  ModelBundle<double> bundle3(cfg.registry(), cfg.model, 98);
  restore_parameters(bundle3, ck);
  Optimizer<double> opt3(s3.optimizer);
  restore_optimizer(opt3, ck);
  auto state3 = restore_train_state(ck, s3.balancer);
  const auto a = train_loop(bundle2, data, s3, 5, state2, opt2, 10);
  const auto b = train_loop(bundle3, data, s3, 5, state3, opt3, 10);
  ASSERT_EQ(a.size(), 5u);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].total, b[i].total);
}

TEST(Checkpoint, CorruptionIsRejected) {
  const auto cfg = small_config();
  ModelBundle<float> a(cfg.registry(), cfg.model, 1);
  const auto good = bytes(capture_checkpoint<float>(2, cfg, a));

  auto bad_magic = good;
  bad_magic[0] = 'X';
  EXPECT_THROW(parse(bad_magic), CheckpointError);

  auto bad_version = good;
  bad_version[4] = 9;
  EXPECT_THROW(parse(bad_version), CheckpointError);

  auto bad_stage = good;
  bad_stage[8] = 4;
  EXPECT_THROW(parse(bad_stage), CheckpointError);

  for (std::size_t cut : {std::size_t(3), std::size_t(20), good.size() / 2, good.size() - 1}) {
    EXPECT_THROW(parse(good.substr(0, cut)), CheckpointError) << cut;
  }
  EXPECT_THROW(load_checkpoint("/nonexistent/x.owck"), CheckpointError);
}

TEST(Checkpoint, IncompatibleConfigIsRejected) {
  const auto cfg = small_config();
  ModelBundle<float> a(cfg.registry(), cfg.model, 1);
  const auto ck = capture_checkpoint<float>(1, cfg, a);

  auto wider = cfg;
  wider.model.d_red = 12;
  EXPECT_THROW(check_compatible(ck, wider), CheckpointError);
  auto fewer = cfg;
  fewer.modalities.pop_back();
  EXPECT_THROW(check_compatible(ck, fewer), CheckpointError);
  auto other_budget = cfg;
  other_budget.stage3.steps = 5;
  EXPECT_NO_THROW(check_compatible(ck, other_budget));

  ModelBundle<float> mismatched(wider.registry(), wider.model, 1);
  EXPECT_THROW(restore_parameters(mismatched, ck), CheckpointError);
}

}  // namespace
}  // namespace ow
