#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ow/data.hpp"
#include "ow/model.hpp"
#include "ow/pretrain.hpp"
#include "ow/registry.hpp"
#include "ow/trainer.hpp"

namespace ow {

/// One registered modality: its tokenizer, the synthetic generator feeding
/// it (the block matching the family is used), and the generator tasks to
/// register, in order.
struct ModalityConfig {
  std::string name;
  TokenizerConfig tokenizer;
  GridDataConfig grid;
  SequenceDataConfig sequence;
  SetDataConfig set;
  TableDataConfig table;
  std::vector<std::string> tasks;
};

struct AdaptSection {
  AdaptConfig adapter;
  TableDataConfig data;
  std::string task = "sign";
};

/// Miniature model for finite-difference checks, run in 64-bit.
struct GradcheckConfig {
  std::size_t d_tok = 16;
  std::size_t d_red = 8;
  std::size_t layers = 1;
  std::size_t heads = 2;
  double h = 1e-5;
  double tolerance = 1e-3;
  std::uint64_t seed = 5;
};

struct RunConfig {
  std::uint64_t seed = 7;
  ModelDims model;
  std::vector<ModalityConfig> modalities;
  MaskingConfig masking;
  Stage1Config stage1;
  Stage2Config stage2;
  Stage3Config stage3;
  AdaptSection adapt;
  GradcheckConfig gradcheck;
  std::string metrics_path;

  /// Throws ConfigError naming the offending field.
  void validate() const;

  ModalityRegistry registry() const;
  std::vector<SyntheticDataset> datasets() const;
};

/// The synthetic suite: grid {class, occupancy}, sequence {motif, half}, set {shape}.
RunConfig default_config();

/// Generator output restricted to `m.tasks`, in that order.
SyntheticDataset build_dataset(const ModalityConfig& m);

std::string to_json(const RunConfig& config, int indent = 2);
/// Missing keys keep their defaults; unknown keys and wrong types raise
/// ConfigError with the field path. The result is validated.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::string& path);

}  // namespace ow
