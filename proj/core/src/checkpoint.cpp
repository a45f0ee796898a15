#include "ow/checkpoint.hpp"

#include <fstream>

#include "binary_io.hpp"
#include "json.hpp"
#include "ow/errors.hpp"

namespace ow {

using nlohmann::json;

namespace {

constexpr std::uint32_t kMaxRank = 8;
constexpr std::uint64_t kMaxElements = 1ull << 31;

std::string describe(const Shape& s) { return shape_string(s); }

}  // namespace

const TensorRecord* Checkpoint::find(const std::string& name) const {
  for (const auto& r : records) {
    if (r.name == name) return &r;
  }
  return nullptr;
}

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  out.write("OWCK", 4);
  binary::put_u32(out, ckpt.version);
  binary::put_u32(out, ckpt.stage);
  binary::put_bytes(out, ckpt.config_json);
  binary::put_bytes(out, ckpt.state_json);
  binary::put_u32(out, std::uint32_t(ckpt.records.size()));
  for (const auto& r : ckpt.records) {
    if (element_count(r.shape) != r.values.size()) throw ShapeError("checkpoint record " + r.name + " is inconsistent");
    binary::put_u32(out, std::uint32_t(r.name.size()));
    out.write(r.name.data(), std::streamsize(r.name.size()));
    binary::put_u32(out, std::uint32_t(r.shape.size()));
    for (std::size_t e : r.shape) binary::put_u64(out, e);
    for (float v : r.values) binary::put_f32(out, v);
  }
  if (!out) throw CheckpointError("failed writing checkpoint");
}

Checkpoint read_checkpoint(std::istream& in) {
  binary::expect_magic(in, "OWCK");
  Checkpoint c;
  c.version = binary::get_u32(in, "checkpoint version");
  if (c.version != kCheckpointVersion) {
    throw CheckpointError("checkpoint version " + std::to_string(c.version) + " unsupported (expected " +
                          std::to_string(kCheckpointVersion) + ")");
  }
  c.stage = binary::get_u32(in, "stage tag");
  if (c.stage < 1 || c.stage > 3) throw CheckpointError("invalid stage tag " + std::to_string(c.stage));
  c.config_json = binary::get_bytes(in, "config");
  c.state_json = binary::get_bytes(in, "state");
  const auto count = binary::get_u32(in, "record count");
  for (std::uint32_t i = 0; i < count; ++i) {
    TensorRecord r;
    const auto len = binary::get_u32(in, "record name length");
    if (len > (1u << 16)) throw CheckpointError("implausible record name length");
    r.name.resize(len);
    binary::read_exact(in, r.name.data(), len, "record name");
    const auto rank = binary::get_u32(in, "record rank");
    if (rank > kMaxRank) throw CheckpointError("record " + r.name + " has implausible rank " + std::to_string(rank));
    std::uint64_t n = 1;
    for (std::uint32_t k = 0; k < rank; ++k) {
      const auto e = binary::get_u64(in, "record extent");
      if (e == 0 || e > kMaxElements || n * e > kMaxElements) throw CheckpointError("record " + r.name + " has bad extents");
      n *= e;
      r.shape.push_back(std::size_t(e));
    }
    r.values.resize(std::size_t(n));
    for (auto& v : r.values) v = binary::get_f32(in, "record values");
    c.records.push_back(std::move(r));
  }
  return c;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot open " + path + " for writing");
  write_checkpoint(out, ckpt);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path);
  return read_checkpoint(in);
}

template <typename T>
Checkpoint capture_checkpoint(std::uint32_t stage, const RunConfig& config, const ModelBundle<T>& bundle,
                              const Optimizer<T>* opt, const TrainState* state) {
  Checkpoint c;
  c.stage = stage;
  c.config_json = to_json(config, -1);
  json st = json::object();
  for (const auto& p : bundle.parameters()) {
    const auto v = p.tensor.values();
    c.records.push_back({p.name, p.tensor.shape(), std::vector<float>(v.begin(), v.end())});
  }
  if (opt != nullptr) {
    json steps = json::object();
    for (const auto& [name, m] : opt->state()) {
      steps[name] = m.steps;
      const Shape shape{m.first.size()};
      c.records.push_back({"opt.m:" + name, shape, std::vector<float>(m.first.begin(), m.first.end())});
      if (!m.second.empty()) {
        c.records.push_back({"opt.v:" + name, shape, std::vector<float>(m.second.begin(), m.second.end())});
      }
    }
    st["optimizer"] = {{"step_count", opt->step_count()}, {"steps", steps}};
  }
  if (state != nullptr) st["train"] = json::parse(state->to_json());
  c.state_json = st.dump();
  return c;
}

template <typename T>
void restore_parameters(ModelBundle<T>& bundle, const Checkpoint& ckpt) {
  for (auto& p : bundle.parameters()) {
    const auto* r = ckpt.find(p.name);
    if (r == nullptr) throw CheckpointError("checkpoint lacks parameter " + p.name);
    if (r->shape != p.tensor.shape()) {
      throw CheckpointError("parameter " + p.name + " is " + describe(r->shape) + " in the checkpoint but " +
                            describe(p.tensor.shape()) + " in the configured model");
    }
    auto dst = p.tensor.mutable_values();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = T(r->values[i]);
  }
}

template <typename T>
void restore_optimizer(Optimizer<T>& opt, const Checkpoint& ckpt) {
  const auto st = json::parse(ckpt.state_json.empty() ? "{}" : ckpt.state_json);
  if (!st.contains("optimizer")) throw CheckpointError("checkpoint has no optimizer state");
  const auto& o = st.at("optimizer");
  std::map<std::string, Moments<T>> state;
  for (const auto& [name, steps] : o.at("steps").items()) {
    Moments<T> m;
    m.steps = steps.template get<std::uint64_t>();
    const auto* first = ckpt.find("opt.m:" + name);
    if (first == nullptr) throw CheckpointError("checkpoint lacks optimizer moment for " + name);
    m.first.assign(first->values.begin(), first->values.end());
    if (const auto* second = ckpt.find("opt.v:" + name)) m.second.assign(second->values.begin(), second->values.end());
    state.emplace(name, std::move(m));
  }
  opt.restore(std::move(state), o.at("step_count").get<std::uint64_t>());
}

TrainState restore_train_state(const Checkpoint& ckpt, const BalancerConfig& balancer) {
  const auto st = json::parse(ckpt.state_json.empty() ? "{}" : ckpt.state_json);
  if (!st.contains("train")) throw CheckpointError("checkpoint has no training state");
  return TrainState::from_json(st.at("train").dump(), balancer);
}

void require_stage(const Checkpoint& ckpt, std::initializer_list<std::uint32_t> allowed) {
  for (auto s : allowed) {
    if (ckpt.stage == s) return;
  }
  std::string want;
  for (auto s : allowed) want += (want.empty() ? "" : " or ") + std::to_string(s);
  throw CheckpointError("checkpoint is from stage " + std::to_string(ckpt.stage) + ", expected stage " + want);
}

void check_compatible(const Checkpoint& ckpt, const RunConfig& config) {
  json stored;
  try {
    stored = json::parse(ckpt.config_json);
  } catch (const json::parse_error&) {
    throw CheckpointError("checkpoint carries an unreadable config");
  }
  const auto current = json::parse(to_json(config, -1));
  for (const char* key : {"model", "modalities"}) {
    if (!stored.contains(key) || stored.at(key) != current.at(key)) {
      throw CheckpointError(std::string("checkpoint ") + key + " section differs from the run config");
    }
  }
}

template Checkpoint capture_checkpoint(std::uint32_t, const RunConfig&, const ModelBundle<float>&,
                                       const Optimizer<float>*, const TrainState*);
template Checkpoint capture_checkpoint(std::uint32_t, const RunConfig&, const ModelBundle<double>&,
                                       const Optimizer<double>*, const TrainState*);
template void restore_parameters(ModelBundle<float>&, const Checkpoint&);
template void restore_parameters(ModelBundle<double>&, const Checkpoint&);
template void restore_optimizer(Optimizer<float>&, const Checkpoint&);
template void restore_optimizer(Optimizer<double>&, const Checkpoint&);

}  // namespace ow
