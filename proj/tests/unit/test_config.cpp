#include <gtest/gtest.h>

#include "ow/config.hpp"
#include "ow/errors.hpp"

namespace ow {
namespace {

std::string error_path(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.path();
  }
  return "<accepted>";
}

TEST(Config, DefaultsRoundTrip) {
  const auto c = default_config();
  const auto text = to_json(c);
  const auto back = parse_config(text);
  EXPECT_EQ(to_json(back), text);
  EXPECT_EQ(back.registry().size(), 3u);
  EXPECT_EQ(back.stage3.batch, 16u);
  EXPECT_EQ(back.masking.fraction_f, 0.05);
}

TEST(Config, ModifiedValuesRoundTrip) {
  auto c = default_config();
  c.seed = 123456789012345ull;
  c.stage3.balancer.gamma = 0.0;
  c.stage3.label_fraction = 0.1;
  c.masking.set = 0.75;
  c.model.d_red = 8;
  c.modalities.pop_back();
  const auto back = parse_config(to_json(c, -1));
  EXPECT_EQ(back.seed, c.seed);
  EXPECT_EQ(back.stage3.balancer.gamma, 0.0);
  EXPECT_EQ(back.masking.set, 0.75);
  EXPECT_EQ(back.modalities.size(), 2u);
  EXPECT_EQ(to_json(back), to_json(c));
}

TEST(Config, PartialFileKeepsDefaults) {
  const auto c = parse_config(R"({"seed": 9, "stage3": {"steps": 10}})");
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.stage3.steps, 10u);
  EXPECT_EQ(c.stage3.batch, 16u);
  EXPECT_EQ(c.modalities.size(), 3u);
}

TEST(Config, ErrorsNameTheField) {
  EXPECT_EQ(error_path(R"({"stage3": {"bogus": 1}})"), "stage3.bogus");
  EXPECT_EQ(error_path(R"({"stage3": {"batch": 7}})"), "stage3.batch");
  EXPECT_EQ(error_path(R"({"stage2": {"batch": "x"}})"), "stage2.batch");
  EXPECT_EQ(error_path(R"({"masking": {"grid": 1.0}})"), "masking.grid");
  EXPECT_EQ(error_path(R"({"masking": {"set": -0.1}})"), "masking.set");
  EXPECT_EQ(error_path(R"({"stage3": {"out_fusion_drop": 1.5}})"), "stage3.out_fusion_drop");
  EXPECT_EQ(error_path(R"({"stage3": {"optimizer": {"kind": "lbfgs"}}})"), "stage3.optimizer.kind");
  EXPECT_NE(error_path(R"({"masking": {"fraction_f": 0.0}})"), "<accepted>");
  EXPECT_NE(error_path(R"({"modalities": [{"name": "g", "family": "grid", "data": {"height": 10}}]})"),
            "<accepted>");
  EXPECT_THROW(parse_config("{not json"), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/run.json"), ConfigError);
}

TEST(Config, ShippedConfigsLoad) {
  for (const char* name : {"default.json", "toy.json", "suite.json"}) {
    const auto c = load_config(std::string(OW_CONFIG_DIR) + "/" + name);
    EXPECT_EQ(c.registry().size(), 3u) << name;
  }
  EXPECT_EQ(to_json(load_config(std::string(OW_CONFIG_DIR) + "/default.json")), to_json(default_config()));
}

TEST(Config, DatasetsMatchRegistry) {
  const auto c = load_config(std::string(OW_CONFIG_DIR) + "/toy.json");
  const auto reg = c.registry();
  const auto data = c.datasets();
  ASSERT_EQ(data.size(), reg.size());
  for (std::size_t m = 0; m < reg.size(); ++m) {
    EXPECT_EQ(data[m].samples.size(), 40u);
    ASSERT_EQ(data[m].tasks.size(), reg[m].tasks.size());
    for (std::size_t t = 0; t < reg[m].tasks.size(); ++t) {
      EXPECT_EQ(reg[m].tasks[t].modality, m);
      EXPECT_EQ(reg[m].tasks[t].task, t);
      EXPECT_EQ(data[m].tasks[t].name, reg[m].tasks[t].name);
    }
  }
}

}  // namespace
}  // namespace ow
