#include <gtest/gtest.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "ow/checkpoint.hpp"
#include "ow/commands.hpp"
#include "ow/config.hpp"

namespace ow {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = fs::temp_directory_path() / ("ow_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir_);
    toy_ = std::string(OW_CONFIG_DIR) + "/toy.json";
  }
  static void TearDownTestSuite() { fs::remove_all(dir_); }

  static std::string path(const std::string& name) { return (dir_ / name).string(); }

  struct Result {
    int code;
    std::string out;
    std::string err;
    json report() const { return json::parse(out); }
  };

  static Result run(const std::string& cmd, CommandOptions o) {
    if (o.config_path.empty()) o.config_path = toy_;
    std::ostringstream out, err;
    const int code = run_command(cmd, o, out, err);
    return {code, out.str(), err.str()};
  }

  static const std::string& stage1() {
    static const std::string p = [] {
      CommandOptions o;
      o.out = path("s1.owck");
      o.metrics = path("s1.jsonl");
      EXPECT_EQ(run("pretrain1", o).code, kExitOk);
      return o.out;
    }();
    return p;
  }

  static const std::string& stage2() {
    static const std::string p = [] {
      CommandOptions o;
      o.checkpoint = stage1();
      o.out = path("s2.owck");
      EXPECT_EQ(run("pretrain2", o).code, kExitOk);
      return o.out;
    }();
    return p;
  }

  static std::vector<float> values(const Checkpoint& c, const std::string& prefix) {
    std::vector<float> out;
    for (const auto& r : c.records) {
      if (r.name.rfind(prefix, 0) == 0) out.insert(out.end(), r.values.begin(), r.values.end());
    }
    return out;
  }

  static inline fs::path dir_;
  static inline std::string toy_;
};

TEST_F(Cli, Pretrain1WritesCheckpointAndMetrics) {
  const auto ck = load_checkpoint(stage1());
  EXPECT_EQ(ck.stage, 1u);
  const auto cfg = load_config(toy_);
  const auto init = capture_checkpoint<float>(1, cfg, ModelBundle<float>(cfg.registry(), cfg.model, cfg.seed));
  EXPECT_NE(values(ck, "f.stack/"), values(init, "f.stack/"));
  EXPECT_EQ(values(ck, "g/"), values(init, "g/"));
  EXPECT_TRUE(values(ck, "dec1.").empty());

  std::ifstream in(path("s1.jsonl"));
  std::string line;
  long prev = -1;
  std::size_t lines = 0;
  while (std::getline(in, line)) {
    const auto j = json::parse(line);
    EXPECT_EQ(j.at("stage"), 1);
    EXPECT_GT(j.at("step").get<long>(), prev);
    prev = j.at("step").get<long>();
    ++lines;
  }
  EXPECT_EQ(lines, 6u);  // 1 epoch x 3 modalities x 2 batches
}

TEST_F(Cli, Pretrain2ChangesTrunkNotHeads) {
  const auto c1 = load_checkpoint(stage1());
  const auto c2 = load_checkpoint(stage2());
  EXPECT_EQ(c2.stage, 2u);
  EXPECT_NE(values(c2, "g/"), values(c1, "g/"));
  EXPECT_NE(values(c2, "a_mid/"), values(c1, "a_mid/"));
  EXPECT_EQ(values(c2, "head."), values(c1, "head."));

  CommandOptions o;
  o.checkpoint = stage2();
  o.out = path("bad.owck");
  const auto r = run("pretrain2", o);
  EXPECT_EQ(r.code, kExitCheckpoint);
  EXPECT_NE(r.err.find("stage"), std::string::npos);
}

TEST_F(Cli, TrainReportsEveryTaskAndIsReproducible) {
  CommandOptions o;
  o.checkpoint = stage2();
  o.out = path("s3a.owck");
  const auto a = run("train", o);
  ASSERT_EQ(a.code, kExitOk) << a.err;
  const auto ra = a.report();
  EXPECT_EQ(ra.at("eval").size(), 5u);
  EXPECT_EQ(ra.at("step"), 6);
  o.out = path("s3b.owck");
  const auto rb = run("train", o).report();
  EXPECT_EQ(ra.at("final_total").get<double>(), rb.at("final_total").get<double>());
  EXPECT_EQ(ra.at("eval"), rb.at("eval"));

  CommandOptions e;
  e.checkpoint = path("s3a.owck");
  e.split = "train";
  const auto ev = run("eval", e);
  ASSERT_EQ(ev.code, kExitOk) << ev.err;
  EXPECT_EQ(ev.report().at("eval").size(), 5u);
  e.checkpoint = stage1();
  EXPECT_EQ(run("eval", e).code, kExitCheckpoint);
}

TEST_F(Cli, ColdStartSkipsCheckpoint) {
  CommandOptions o;
  o.cold_start = true;
  o.out = path("cold.owck");
  const auto r = run("train", o);
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(r.report().at("from_stage"), 0);
  o.checkpoint = stage2();
  EXPECT_EQ(run("train", o).code, kExitConfig);
}

TEST_F(Cli, ResumeContinuesTheSameLosses) {
  auto cfg = json::parse(std::ifstream(toy_));
  cfg["stage3"]["steps"] = 10;
  const auto long_cfg = path("toy10.json");
  std::ofstream(long_cfg) << cfg.dump();

  CommandOptions full;
  full.config_path = long_cfg;
  full.checkpoint = stage2();
  full.out = path("full.owck");
  full.metrics = path("full.jsonl");
  ASSERT_EQ(run("train", full).code, kExitOk);

  CommandOptions first;
  first.checkpoint = stage2();
  first.out = path("half.owck");
  ASSERT_EQ(run("train", first).code, kExitOk);
  CommandOptions rest;
  rest.config_path = long_cfg;
  rest.checkpoint = path("half.owck");
  rest.out = path("rest.owck");
  rest.metrics = path("rest.jsonl");
  const auto r = run("train", rest);
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(r.report().at("steps_run"), 4);

  auto read = [](const std::string& p) {
    std::vector<json> out;
    std::ifstream in(p);
    std::string line;
    while (std::getline(in, line)) out.push_back(json::parse(line));
    return out;
  };
  const auto a = read(path("full.jsonl")), b = read(path("rest.jsonl"));
  ASSERT_EQ(a.size(), 10u);
  ASSERT_EQ(b.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(a[6 + i], b[i]);
}

TEST_F(Cli, ExitCodes) {
  CommandOptions o;
  o.out = path("x.owck");
  o.config_path = path("missing.json");
  EXPECT_EQ(run("pretrain1", o).code, kExitConfig);

  const auto bad = path("bad.json");
  std::ofstream(bad) << R"({"stage3": {"batch": 5}})";
  o.config_path = bad;
  const auto r = run("pretrain1", o);
  EXPECT_EQ(r.code, kExitConfig);
  EXPECT_NE(r.err.find("stage3.batch"), std::string::npos);

  EXPECT_EQ(run("pretrain1", CommandOptions{}).code, kExitConfig);  // no --out
  EXPECT_EQ(run("frobnicate", CommandOptions{}).code, kExitConfig);

  std::string bytes;
  {
    std::ifstream in(stage1(), std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(in), {});
  }
  for (std::size_t at : {std::size_t(0), std::size_t(4)}) {
    auto broken = bytes;
    broken[at] ^= 0x5a;
    const auto p = path("broken.owck");
    std::ofstream(p, std::ios::binary) << broken;
    CommandOptions c;
    c.checkpoint = p;
    c.out = path("y.owck");
    EXPECT_EQ(run("pretrain2", c).code, kExitCheckpoint) << at;
  }

  auto other = json::parse(std::ifstream(toy_));
  other["model"]["d_red"] = 8;
  const auto other_cfg = path("other.json");
  std::ofstream(other_cfg) << other.dump();
  CommandOptions c;
  c.config_path = other_cfg;
  c.checkpoint = stage1();
  c.out = path("z.owck");
  EXPECT_EQ(run("pretrain2", c).code, kExitCheckpoint);
}

TEST_F(Cli, AdaptLeavesBundleUntouched) {
  CommandOptions o;
  o.checkpoint = stage2();
  const auto r = run("adapt", o);
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto j = r.report();
  EXPECT_EQ(j.at("sampled"), 20);
  EXPECT_EQ(j.at("train_pool"), 200);
  EXPECT_EQ(j.at("checksum_before"), j.at("checksum_after"));
  o.family = "audio";
  EXPECT_EQ(run("adapt", o).code, kExitConfig);
  o.family = "grid";
  EXPECT_EQ(run("adapt", o).code, kExitConfig);
}

TEST_F(Cli, DefaultsParseBack) {
  const auto r = run("defaults", CommandOptions{});
  ASSERT_EQ(r.code, kExitOk);
  EXPECT_EQ(to_json(parse_config(r.out)), to_json(default_config()));
}

}  // namespace
}  // namespace ow
