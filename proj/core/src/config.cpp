#include "ow/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "ow/errors.hpp"

namespace ow {

using nlohmann::json;

namespace {

static_assert(sizeof(std::size_t) == sizeof(std::uint64_t));

// Reads keys of one JSON object, remembering which were consumed so that
// leftovers can be reported as unknown fields.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_, "expected an object");
  }

  bool has(const char* key) const { return j_.contains(key); }
  std::string path(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  void read(const char* key, std::size_t& out) {
    if (const json* v = take(key)) {
      if (!v->is_number_integer() || (v->is_number_integer() && !v->is_number_unsigned() && v->get<long long>() < 0)) {
        throw ConfigError(path(key), "expected a non-negative integer");
      }
      out = v->get<std::size_t>();
    }
  }
  void read(const char* key, double& out) {
    if (const json* v = take(key)) {
      if (!v->is_number()) throw ConfigError(path(key), "expected a number");
      out = v->get<double>();
    }
  }
  void read(const char* key, bool& out) {
    if (const json* v = take(key)) {
      if (!v->is_boolean()) throw ConfigError(path(key), "expected true or false");
      out = v->get<bool>();
    }
  }
  void read(const char* key, std::string& out) {
    if (const json* v = take(key)) {
      if (!v->is_string()) throw ConfigError(path(key), "expected a string");
      out = v->get<std::string>();
    }
  }
  void read(const char* key, std::vector<std::string>& out) {
    if (const json* v = take(key)) {
      if (!v->is_array()) throw ConfigError(path(key), "expected an array of strings");
      out.clear();
      for (std::size_t i = 0; i < v->size(); ++i) {
        if (!(*v)[i].is_string()) throw ConfigError(path(key) + "[" + std::to_string(i) + "]", "expected a string");
        out.push_back((*v)[i].get<std::string>());
      }
    }
  }
  void read(const char* key, std::vector<std::size_t>& out) {
    if (const json* v = take(key)) {
      if (!v->is_array()) throw ConfigError(path(key), "expected an array of integers");
      out.clear();
      for (std::size_t i = 0; i < v->size(); ++i) {
        if (!(*v)[i].is_number_unsigned()) {
          throw ConfigError(path(key) + "[" + std::to_string(i) + "]", "expected a non-negative integer");
        }
        out.push_back((*v)[i].get<std::size_t>());
      }
    }
  }

  /// Sub-object, or nullptr when absent.
  std::unique_ptr<Reader> child(const char* key) {
    if (const json* v = take(key)) return std::make_unique<Reader>(*v, path(key));
    return nullptr;
  }
  const json* raw(const char* key) { return take(key); }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) throw ConfigError(path_.empty() ? k : path_ + "." + k, "unknown field");
    }
  }

 private:
  const json* take(const char* key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::string kind_name(OptimizerKind k) { return k == OptimizerKind::Adam ? "adam" : "sgd-momentum"; }

json optimizer_json(const OptimizerConfig& o) {
  return {{"kind", kind_name(o.kind)}, {"lr", o.lr},     {"momentum", o.momentum},
          {"beta1", o.beta1},          {"beta2", o.beta2}, {"eps", o.eps}};
}

void read_optimizer(Reader* r, OptimizerConfig& o) {
  if (r == nullptr) return;
  std::string kind = kind_name(o.kind);
  r->read("kind", kind);
  if (kind == "adam") {
    o.kind = OptimizerKind::Adam;
  } else if (kind == "sgd-momentum" || kind == "sgd") {
    o.kind = OptimizerKind::SgdMomentum;
  } else {
    throw ConfigError(r->path("kind"), "unknown optimizer '" + kind + "' (adam, sgd-momentum)");
  }
  r->read("lr", o.lr);
  r->read("momentum", o.momentum);
  r->read("beta1", o.beta1);
  r->read("beta2", o.beta2);
  r->read("eps", o.eps);
  r->finish();
}

json table_data_json(const TableDataConfig& t) {
  return {{"n", t.n}, {"numeric", t.numeric}, {"categorical", t.categorical},
          {"train_fraction", t.train_fraction}, {"seed", t.seed}};
}

void read_table_data(Reader* r, TableDataConfig& t) {
  if (r == nullptr) return;
  r->read("n", t.n);
  r->read("numeric", t.numeric);
  r->read("categorical", t.categorical);
  r->read("train_fraction", t.train_fraction);
  r->read("seed", t.seed);
  r->finish();
}

json modality_json(const ModalityConfig& m) {
  json j{{"name", m.name}, {"family", std::string(family_name(m.tokenizer.family))}, {"tasks", m.tasks}};
  const auto& t = m.tokenizer;
  switch (t.family) {
    case Family::Grid:
      j["tokenizer"] = {{"patch", t.patch}};
      j["data"] = {{"n", m.grid.n},         {"height", m.grid.height}, {"width", m.grid.width},
                   {"channels", m.grid.channels}, {"classes", m.grid.classes}, {"noise", m.grid.noise},
                   {"train_fraction", m.grid.train_fraction}, {"seed", m.grid.seed}};
      break;
    case Family::Sequence:
      j["tokenizer"] = json::object();
      j["data"] = {{"n", m.sequence.n},           {"length", m.sequence.length},
                   {"vocab", m.sequence.vocab},   {"classes", m.sequence.classes},
                   {"motif_length", m.sequence.motif_length},
                   {"train_fraction", m.sequence.train_fraction}, {"seed", m.sequence.seed}};
      break;
    case Family::Set:
      j["tokenizer"] = {{"groups", t.groups}, {"group_size", t.group_size}};
      j["data"] = {{"n", m.set.n},          {"points", m.set.points}, {"classes", m.set.classes},
                   {"jitter", m.set.jitter}, {"train_fraction", m.set.train_fraction}, {"seed", m.set.seed}};
      break;
    case Family::Table:
      j["tokenizer"] = json::object();
      j["data"] = table_data_json(m.table);
      break;
  }
  return j;
}

ModalityConfig family_defaults(Family f) {
  ModalityConfig m;
  m.tokenizer.family = f;
  m.name = std::string(family_name(f));
  switch (f) {
    case Family::Grid: m.tasks = {"class", "occupancy"}; break;
    case Family::Sequence: m.tasks = {"motif", "half"}; break;
    case Family::Set: m.tasks = {"shape"}; break;
    case Family::Table: m.tasks = {"sign"}; break;
  }
  return m;
}

// Copies generator extents into the tokenizer so the two cannot disagree.
void sync_tokenizer(ModalityConfig& m, std::size_t d_tok) {
  auto& t = m.tokenizer;
  t.d_tok = d_tok;
  switch (t.family) {
    case Family::Grid:
      t.height = m.grid.height;
      t.width = m.grid.width;
      t.channels = m.grid.channels;
      m.grid.patch = t.patch;
      break;
    case Family::Sequence:
      t.length = m.sequence.length;
      t.vocab = m.sequence.vocab;
      t.window = 1;
      break;
    case Family::Set:
      t.points = m.set.points;
      t.point_features = 0;
      break;
    case Family::Table: t.fields = table_schema(m.table); break;
  }
}

ModalityConfig read_modality(Reader& r) {
  std::string family = "grid";
  if (!r.has("family")) throw ConfigError(r.path("family"), "missing modality family");
  r.read("family", family);
  Family f;
  try {
    f = parse_family(family);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(r.path("family"), e.what());
  }
  ModalityConfig m = family_defaults(f);
  r.read("name", m.name);
  r.read("tasks", m.tasks);
  auto tok = r.child("tokenizer");
  auto data = r.child("data");
  switch (f) {
    case Family::Grid:
      if (tok) tok->read("patch", m.tokenizer.patch);
      if (data) {
        data->read("n", m.grid.n);
        data->read("height", m.grid.height);
        data->read("width", m.grid.width);
        data->read("channels", m.grid.channels);
        data->read("classes", m.grid.classes);
        data->read("noise", m.grid.noise);
        data->read("train_fraction", m.grid.train_fraction);
        data->read("seed", m.grid.seed);
      }
      break;
    case Family::Sequence:
      if (data) {
        data->read("n", m.sequence.n);
        data->read("length", m.sequence.length);
        data->read("vocab", m.sequence.vocab);
        data->read("classes", m.sequence.classes);
        data->read("motif_length", m.sequence.motif_length);
        data->read("train_fraction", m.sequence.train_fraction);
        data->read("seed", m.sequence.seed);
      }
      break;
    case Family::Set:
      if (tok) {
        tok->read("groups", m.tokenizer.groups);
        tok->read("group_size", m.tokenizer.group_size);
      }
      if (data) {
        data->read("n", m.set.n);
        data->read("points", m.set.points);
        data->read("classes", m.set.classes);
        data->read("jitter", m.set.jitter);
        data->read("train_fraction", m.set.train_fraction);
        data->read("seed", m.set.seed);
      }
      break;
    case Family::Table:
      if (data) {
        read_table_data(data.get(), m.table);
        data.reset();
      }
      break;
  }
  if (tok) tok->finish();
  if (data) data->finish();
  r.finish();
  return m;
}

void check_ratio(double v, const std::string& path) {
  if (!(v >= 0.0) || v >= 1.0) throw ConfigError(path, "must lie in [0, 1)");
}

void check_optimizer(const OptimizerConfig& o, const std::string& path) {
  if (!(o.lr > 0.0) || !std::isfinite(o.lr)) throw ConfigError(path + ".lr", "must be positive");
  if (!(o.beta1 >= 0.0 && o.beta1 < 1.0)) throw ConfigError(path + ".beta1", "must lie in [0, 1)");
  if (!(o.beta2 >= 0.0 && o.beta2 < 1.0)) throw ConfigError(path + ".beta2", "must lie in [0, 1)");
  if (!(o.eps > 0.0)) throw ConfigError(path + ".eps", "must be positive");
  if (!(o.momentum >= 0.0 && o.momentum < 1.0)) throw ConfigError(path + ".momentum", "must lie in [0, 1)");
}

void check_even_batch(std::size_t b, const std::string& path) {
  if (b < 2 || b % 2 != 0) throw ConfigError(path, "batch size must be even and at least 2, got " + std::to_string(b));
}

}  // namespace

RunConfig default_config() {
  RunConfig c;
  c.modalities = {family_defaults(Family::Grid), family_defaults(Family::Sequence), family_defaults(Family::Set)};
  for (auto& m : c.modalities) sync_tokenizer(m, c.model.d_tok);
  c.stage1.optimizer.lr = 1e-3;
  c.stage2.optimizer.lr = 1e-3;
  c.stage3.optimizer.lr = 1e-3;
  c.adapt.data.n = 250;
  return c;
}

SyntheticDataset build_dataset(const ModalityConfig& mc) {
  ModalityConfig m = mc;
  sync_tokenizer(m, m.tokenizer.d_tok);
  SyntheticDataset full;
  switch (m.tokenizer.family) {
    case Family::Grid: full = gen_grid_dataset(m.grid); break;
    case Family::Sequence: full = gen_sequence_dataset(m.sequence); break;
    case Family::Set: full = gen_set_dataset(m.set); break;
    case Family::Table: full = gen_table_dataset(m.table); break;
  }
  full.name = m.name;
  std::vector<std::size_t> pick;
  std::vector<TaskSpec> tasks;
  for (const auto& name : m.tasks) {
    std::size_t k = 0;
    while (k < full.tasks.size() && full.tasks[k].name != name) ++k;
    if (k == full.tasks.size()) throw std::invalid_argument("no task '" + name + "' for modality " + m.name);
    pick.push_back(k);
    tasks.push_back(full.tasks[k]);
  }
  for (std::size_t t = 0; t < tasks.size(); ++t) tasks[t].task = t;
  for (auto& s : full.samples) {
    std::vector<TaskTarget> targets;
    for (std::size_t k : pick) targets.push_back(s.targets[k]);
    s.targets = std::move(targets);
  }
  full.tasks = std::move(tasks);
  return full;
}

void RunConfig::validate() const {
  try {
    model.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("model", e.what());
  }
  if (model.d_tok % 4 != 0) throw ConfigError("model.d_tok", "must be a multiple of 4");
  if (modalities.empty()) throw ConfigError("modalities", "at least one modality is required");
  std::set<std::string> names;
  for (std::size_t i = 0; i < modalities.size(); ++i) {
    const std::string p = "modalities[" + std::to_string(i) + "]";
    ModalityConfig m = modalities[i];
    if (m.name.empty() || m.name.find_first_of("/.") != std::string::npos) {
      throw ConfigError(p + ".name", "must be non-empty without '/' or '.'");
    }
    if (!names.insert(m.name).second) throw ConfigError(p + ".name", "duplicate modality '" + m.name + "'");
    sync_tokenizer(m, model.d_tok);
    try {
      m.tokenizer.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(p + ".tokenizer", e.what());
    }
    const auto fam = m.tokenizer.family;
    if (fam == Family::Grid && (m.grid.classes < 2)) throw ConfigError(p + ".data.classes", "needs K >= 2");
    if (fam == Family::Sequence && m.sequence.vocab <= m.sequence.classes) {
      throw ConfigError(p + ".data.vocab", "needs V > K");
    }
    std::set<std::string> seen;
    const auto allowed = family_defaults(fam).tasks;
    for (std::size_t t = 0; t < m.tasks.size(); ++t) {
      const auto tp = p + ".tasks[" + std::to_string(t) + "]";
      if (std::find(allowed.begin(), allowed.end(), m.tasks[t]) == allowed.end()) {
        throw ConfigError(tp, "unknown task '" + m.tasks[t] + "' for family " + std::string(family_name(fam)));
      }
      if (!seen.insert(m.tasks[t]).second) throw ConfigError(tp, "duplicate task '" + m.tasks[t] + "'");
    }
  }
  check_ratio(masking.grid, "masking.grid");
  check_ratio(masking.sequence, "masking.sequence");
  check_ratio(masking.set, "masking.set");
  check_ratio(masking.table, "masking.table");
  if (!(masking.fraction_f > 0.0) || masking.fraction_f >= 1.0) throw ConfigError("masking.fraction_f", "must lie in (0, 1)");

  if (stage1.batch == 0) throw ConfigError("stage1.batch", "must be positive");
  check_optimizer(stage1.optimizer, "stage1.optimizer");
  check_even_batch(stage2.batch, "stage2.batch");
  check_optimizer(stage2.optimizer, "stage2.optimizer");
  check_even_batch(stage3.batch, "stage3.batch");
  check_optimizer(stage3.optimizer, "stage3.optimizer");
  if (!(stage3.label_fraction > 0.0) || stage3.label_fraction > 1.0) {
    throw ConfigError("stage3.label_fraction", "must lie in (0, 1]");
  }
  if (!(stage3.out_fusion_drop >= 0.0 && stage3.out_fusion_drop <= 1.0)) {
    throw ConfigError("stage3.out_fusion_drop", "must lie in [0, 1]");
  }
  stage3.balancer.validate();

  if (!(adapt.adapter.fraction > 0.0) || adapt.adapter.fraction > 1.0) {
    throw ConfigError("adapt.fraction", "must lie in (0, 1]");
  }
  if (adapt.adapter.hidden == 0) throw ConfigError("adapt.hidden", "must be positive");
  if (!(adapt.adapter.lr > 0.0)) throw ConfigError("adapt.lr", "must be positive");
  if (adapt.task != "sign") throw ConfigError("adapt.task", "the table generator provides only 'sign'");

  if (gradcheck.d_tok == 0 || gradcheck.d_tok % 4 != 0) throw ConfigError("gradcheck.d_tok", "must be a positive multiple of 4");
  if (gradcheck.heads == 0 || gradcheck.d_tok % gradcheck.heads != 0 || gradcheck.d_red % gradcheck.heads != 0) {
    throw ConfigError("gradcheck.heads", "must divide d_tok and d_red");
  }
  if (!(gradcheck.h > 0.0)) throw ConfigError("gradcheck.h", "must be positive");
  if (!(gradcheck.tolerance > 0.0)) throw ConfigError("gradcheck.tolerance", "must be positive");
}

ModalityRegistry RunConfig::registry() const {
  ModalityRegistry reg;
  for (const auto& mc : modalities) {
    ModalityConfig m = mc;
    sync_tokenizer(m, model.d_tok);
    ModalitySpec spec;
    spec.name = m.name;
    spec.tokenizer = m.tokenizer;
    spec.tasks = build_dataset(m).tasks;
    for (std::size_t t = 0; t < spec.tasks.size(); ++t) {
      spec.tasks[t].modality = reg.size();
      spec.tasks[t].task = t;
    }
    reg.push_back(std::move(spec));
  }
  return reg;
}

std::vector<SyntheticDataset> RunConfig::datasets() const {
  std::vector<SyntheticDataset> out;
  for (const auto& mc : modalities) {
    ModalityConfig m = mc;
    sync_tokenizer(m, model.d_tok);
    out.push_back(build_dataset(m));
  }
  return out;
}

std::string to_json(const RunConfig& c, int indent) {
  json j;
  j["seed"] = c.seed;
  j["model"] = {{"d_tok", c.model.d_tok},
                {"d_red", c.model.d_red},
                {"heads", c.model.heads},
                {"f_layers", c.model.f_layers},
                {"g_layers", c.model.g_layers},
                {"head_layers", c.model.head_layers},
                {"decoder_layers", c.model.decoder_layers},
                {"mlp_ratio", c.model.mlp_ratio},
                {"ln_eps", c.model.ln_eps}};
  j["modalities"] = json::array();
  for (const auto& m : c.modalities) j["modalities"].push_back(modality_json(m));
  j["masking"] = {{"grid", c.masking.grid},
                  {"sequence", c.masking.sequence},
                  {"set", c.masking.set},
                  {"table", c.masking.table},
                  {"fraction_f", c.masking.fraction_f}};
  j["stage1"] = {{"epochs", c.stage1.epochs},
                 {"batch", c.stage1.batch},
                 {"batches_per_visit", c.stage1.batches_per_visit},
                 {"optimizer", optimizer_json(c.stage1.optimizer)}};
  j["stage2"] = {{"steps", c.stage2.steps}, {"batch", c.stage2.batch}, {"optimizer", optimizer_json(c.stage2.optimizer)}};
  j["stage3"] = {{"steps", c.stage3.steps},
                 {"batch", c.stage3.batch},
                 {"epoch_steps", c.stage3.balancer.epoch_steps},
                 {"label_fraction", c.stage3.label_fraction},
                 {"balance", c.stage3.balance},
                 {"out_fusion_drop", c.stage3.out_fusion_drop},
                 {"balancer",
                  {{"gamma", c.stage3.balancer.gamma}, {"floor", c.stage3.balancer.floor}, {"cap", c.stage3.balancer.cap}}},
                 {"optimizer", optimizer_json(c.stage3.optimizer)}};
  j["adapt"] = {{"fraction", c.adapt.adapter.fraction},
                {"hidden", c.adapt.adapter.hidden},
                {"epochs", c.adapt.adapter.epochs},
                {"lr", c.adapt.adapter.lr},
                {"seed", c.adapt.adapter.seed},
                {"task", c.adapt.task},
                {"data", table_data_json(c.adapt.data)}};
  j["gradcheck"] = {{"d_tok", c.gradcheck.d_tok},   {"d_red", c.gradcheck.d_red}, {"layers", c.gradcheck.layers},
                    {"heads", c.gradcheck.heads},   {"h", c.gradcheck.h},         {"tolerance", c.gradcheck.tolerance},
                    {"seed", c.gradcheck.seed}};
  j["metrics"] = c.metrics_path;
  return j.dump(indent);
}

RunConfig parse_config(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("malformed config: ") + e.what());
  }
  RunConfig c = default_config();
  Reader root(j, "");
  root.read("seed", c.seed);
  if (auto r = root.child("model")) {
    r->read("d_tok", c.model.d_tok);
    r->read("d_red", c.model.d_red);
    r->read("heads", c.model.heads);
    r->read("f_layers", c.model.f_layers);
    r->read("g_layers", c.model.g_layers);
    r->read("head_layers", c.model.head_layers);
    r->read("decoder_layers", c.model.decoder_layers);
    r->read("mlp_ratio", c.model.mlp_ratio);
    r->read("ln_eps", c.model.ln_eps);
    r->finish();
  }
  if (const json* mods = root.raw("modalities")) {
    if (!mods->is_array()) throw ConfigError("modalities", "expected an array");
    c.modalities.clear();
    for (std::size_t i = 0; i < mods->size(); ++i) {
      Reader r((*mods)[i], "modalities[" + std::to_string(i) + "]");
      c.modalities.push_back(read_modality(r));
    }
  }
  if (auto r = root.child("masking")) {
    r->read("grid", c.masking.grid);
    r->read("sequence", c.masking.sequence);
    r->read("set", c.masking.set);
    r->read("table", c.masking.table);
    r->read("fraction_f", c.masking.fraction_f);
    r->finish();
  }
  if (auto r = root.child("stage1")) {
    r->read("epochs", c.stage1.epochs);
    r->read("batch", c.stage1.batch);
    r->read("batches_per_visit", c.stage1.batches_per_visit);
    read_optimizer(r->child("optimizer").get(), c.stage1.optimizer);
    r->finish();
  }
  if (auto r = root.child("stage2")) {
    r->read("steps", c.stage2.steps);
    r->read("batch", c.stage2.batch);
    read_optimizer(r->child("optimizer").get(), c.stage2.optimizer);
    r->finish();
  }
  if (auto r = root.child("stage3")) {
    r->read("steps", c.stage3.steps);
    r->read("batch", c.stage3.batch);
    r->read("epoch_steps", c.stage3.balancer.epoch_steps);
    r->read("label_fraction", c.stage3.label_fraction);
    r->read("balance", c.stage3.balance);
    r->read("out_fusion_drop", c.stage3.out_fusion_drop);
    if (auto b = r->child("balancer")) {
      b->read("gamma", c.stage3.balancer.gamma);
      b->read("floor", c.stage3.balancer.floor);
      b->read("cap", c.stage3.balancer.cap);
      b->finish();
    }
    read_optimizer(r->child("optimizer").get(), c.stage3.optimizer);
    r->finish();
  }
  if (auto r = root.child("adapt")) {
    r->read("fraction", c.adapt.adapter.fraction);
    r->read("hidden", c.adapt.adapter.hidden);
    r->read("epochs", c.adapt.adapter.epochs);
    r->read("lr", c.adapt.adapter.lr);
    r->read("seed", c.adapt.adapter.seed);
    r->read("task", c.adapt.task);
    read_table_data(r->child("data").get(), c.adapt.data);
    r->finish();
  }
  if (auto r = root.child("gradcheck")) {
    r->read("d_tok", c.gradcheck.d_tok);
    r->read("d_red", c.gradcheck.d_red);
    r->read("layers", c.gradcheck.layers);
    r->read("heads", c.gradcheck.heads);
    r->read("h", c.gradcheck.h);
    r->read("tolerance", c.gradcheck.tolerance);
    r->read("seed", c.gradcheck.seed);
    r->finish();
  }
  root.read("metrics", c.metrics_path);
  root.finish();
  for (auto& m : c.modalities) sync_tokenizer(m, c.model.d_tok);
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot read config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace ow
