#include "ow/registry.hpp"

#include <stdexcept>

namespace ow {

Rng derive_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> stream) {
  std::vector<std::uint32_t> words;
  words.reserve(2 + 2 * stream.size());
  auto push = [&](std::uint64_t v) {
    words.push_back(std::uint32_t(v & 0xffffffffu));
    words.push_back(std::uint32_t(v >> 32));
  };
  push(seed);
  for (auto s : stream) push(s);
  std::seed_seq seq(words.begin(), words.end());
  return Rng(seq);
}

std::string_view family_name(Family family) {
  switch (family) {
    case Family::Grid: return "grid";
    case Family::Sequence: return "sequence";
    case Family::Set: return "set";
    case Family::Table: return "table";
  }
  return "?";
}

Family parse_family(std::string_view name) {
  if (name == "grid") return Family::Grid;
  if (name == "sequence") return Family::Sequence;
  if (name == "set") return Family::Set;
  if (name == "table") return Family::Table;
  throw std::invalid_argument("unknown modality family '" + std::string(name) + "'");
}

TaskSpec TaskSpec::classification(std::string name, std::size_t classes) {
  if (classes < 2) throw std::invalid_argument("classification task '" + name + "' needs >= 2 classes");
  TaskSpec t;
  t.name = std::move(name);
  t.kind = TaskKind::Classification;
  t.classes = classes;
  t.loss = LossKind::CrossEntropy;
  return t;
}

TaskSpec TaskSpec::dense(std::string name, std::size_t output_width) {
  if (output_width == 0) throw std::invalid_argument("dense task '" + name + "' needs a positive output width");
  TaskSpec t;
  t.name = std::move(name);
  t.kind = TaskKind::DensePrediction;
  t.output_width = output_width;
  t.loss = LossKind::L2;
  return t;
}

void TokenizerConfig::validate() const {
  auto fail = [](const std::string& m) { throw std::invalid_argument(m); };
  if (d_tok == 0 || d_tok % 4 != 0) fail("d_tok must be a positive multiple of 4");
  switch (family) {
    case Family::Grid:
      if (patch == 0 || height == 0 || width == 0 || channels == 0) fail("grid extents and patch must be positive");
      if (height % patch != 0 || width % patch != 0) {
        fail("patch size " + std::to_string(patch) + " does not divide " + std::to_string(height) + "x" +
             std::to_string(width));
      }
      break;
    case Family::Sequence:
      if (length == 0) fail("sequence length must be positive");
      if (vocab == 0 && (window == 0 || length % window != 0)) {
        fail("window " + std::to_string(window) + " does not divide length " + std::to_string(length));
      }
      break;
    case Family::Set:
      if (groups == 0 || group_size == 0) fail("set groups and group_size must be positive");
      if (points < groups * group_size) {
        fail("set needs at least groups*group_size = " + std::to_string(groups * group_size) + " points, has " +
             std::to_string(points));
      }
      break;
    case Family::Table:
      if (fields.empty()) fail("table schema has no fields");
      for (const auto& f : fields) {
        if (f.categorical && f.cardinality < 1) fail("categorical table field needs cardinality >= 1");
      }
      break;
  }
}

std::size_t TokenizerConfig::token_count() const {
  switch (family) {
    case Family::Grid: return (height / patch) * (width / patch);
    case Family::Sequence: return vocab > 0 ? length : length / window;
    case Family::Set: return groups;
    case Family::Table: return fields.size();
  }
  return 0;
}

std::size_t TokenizerConfig::raw_width() const {
  switch (family) {
    case Family::Grid: return patch * patch * channels;
    case Family::Sequence: return vocab > 0 ? 1 : window;
    case Family::Set: return group_size * (3 + point_features);
    case Family::Table: return 1;
  }
  return 0;
}

double MaskingConfig::ratio(Family family) const {
  switch (family) {
    case Family::Grid: return grid;
    case Family::Sequence: return sequence;
    case Family::Set: return set;
    case Family::Table: return table;
  }
  return 0;
}

}  // namespace ow
