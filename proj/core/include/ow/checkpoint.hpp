#pragma once

#include <cstdint>
#include <initializer_list>
#include <iosfwd>
#include <string>
#include <vector>

#include "ow/config.hpp"
#include "ow/model.hpp"
#include "ow/optim.hpp"
#include "ow/tensor.hpp"
#include "ow/trainer.hpp"

namespace ow {

/// "OWCK" layout, little-endian:
///   magic, u32 version, u32 stage tag,
///   u64 length + RunConfig JSON, u64 length + state JSON,
///   u32 record count, then per record:
///   u32 name length, name bytes, u32 rank, rank x u64 extents, f32 values.
/// Optimizer moments travel as records "opt.m:<name>" / "opt.v:<name>".
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct TensorRecord {
  std::string name;
  Shape shape;
  std::vector<float> values;
};

struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  std::uint32_t stage = 0;
  std::string config_json;
  std::string state_json;
  std::vector<TensorRecord> records;

  const TensorRecord* find(const std::string& name) const;
};

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
/// Throws CheckpointError on a bad magic, unsupported version or truncation.
Checkpoint read_checkpoint(std::istream& in);
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

/// Parameters (decoders included if present), optimizer moments and train state.
template <typename T>
Checkpoint capture_checkpoint(std::uint32_t stage, const RunConfig& config, const ModelBundle<T>& bundle,
                              const Optimizer<T>* opt = nullptr, const TrainState* state = nullptr);

/// Copies every bundle parameter from its record. A missing record or an
/// extent mismatch throws CheckpointError.
template <typename T>
void restore_parameters(ModelBundle<T>& bundle, const Checkpoint& ckpt);

template <typename T>
void restore_optimizer(Optimizer<T>& opt, const Checkpoint& ckpt);

/// Throws CheckpointError when the checkpoint has no train state.
TrainState restore_train_state(const Checkpoint& ckpt, const BalancerConfig& balancer);

/// Throws CheckpointError unless the stage tag is one of `allowed`.
void require_stage(const Checkpoint& ckpt, std::initializer_list<std::uint32_t> allowed);

/// Throws CheckpointError when the stored model dims or modality layout
/// differ from `config`.
void check_compatible(const Checkpoint& ckpt, const RunConfig& config);

}  // namespace ow
