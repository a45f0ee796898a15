#include "ow/commands.hpp"

#include "json.hpp"
#include <ostream>

#include "ow/checkpoint.hpp"
#include "ow/config.hpp"
#include "ow/errors.hpp"
#include "ow/gradsuite.hpp"
#include "ow/metrics.hpp"
#include "ow/pretrain.hpp"
#include "ow/trainer.hpp"

namespace ow {

namespace {

using json = nlohmann::ordered_json;

RunConfig resolve_config(const CommandOptions& opts) {
  RunConfig c = opts.config_path.empty() ? default_config() : load_config(opts.config_path);
  if (opts.seed) c.seed = *opts.seed;
  if (!opts.metrics.empty()) c.metrics_path = opts.metrics;
  c.validate();
  return c;
}

std::string require_out(const CommandOptions& opts) {
  if (opts.out.empty()) throw ConfigError("out", "an output checkpoint path is required");
  return opts.out;
}

Checkpoint require_checkpoint(const CommandOptions& opts, const RunConfig& config) {
  if (opts.checkpoint.empty()) throw ConfigError("checkpoint", "an input checkpoint is required");
  Checkpoint ckpt = load_checkpoint(opts.checkpoint);
  check_compatible(ckpt, config);
  return ckpt;
}

template <typename T>
json evaluate_all(const ModelBundle<T>& bundle, const std::vector<SyntheticDataset>& datasets,
                  Split split = Split::Test) {
  json evals = json::array();
  for (std::size_t m = 0; m < bundle.modalities(); ++m) {
    for (const auto& t : bundle.registry()[m].tasks) {
      evals.push_back(json::parse(evaluate(bundle, t, datasets[m], split).to_json()));
    }
  }
  return evals;
}

template <typename T>
int pretrain1(const CommandOptions& opts, std::ostream& out) {
  const RunConfig config = resolve_config(opts);
  const std::string path = require_out(opts);
  const auto datasets = config.datasets();
  ModelBundle<T> bundle(config.registry(), config.model, config.seed);
  MetricsWriter metrics(config.metrics_path);
  const auto log = stage1_loop(bundle, std::span<const SyntheticDataset>(datasets), config.masking, config.stage1,
                               config.seed, &metrics);
  save_checkpoint(path, capture_checkpoint<T>(1, config, bundle));
  json r{{"stage", 1}, {"steps", log.size()}, {"checkpoint", path}};
  if (!log.empty()) r["final_loss"] = log.back().loss;
  out << r.dump() << "\n";
  return kExitOk;
}

template <typename T>
int pretrain2(const CommandOptions& opts, std::ostream& out) {
  const RunConfig config = resolve_config(opts);
  const std::string path = require_out(opts);
  const Checkpoint ckpt = require_checkpoint(opts, config);
  require_stage(ckpt, {1});
  const auto datasets = config.datasets();
  ModelBundle<T> bundle(config.registry(), config.model, config.seed);
  restore_parameters(bundle, ckpt);
  MetricsWriter metrics(config.metrics_path);
  const auto log = stage2_loop(bundle, std::span<const SyntheticDataset>(datasets), config.masking, config.stage2,
                               config.seed, &metrics);
  save_checkpoint(path, capture_checkpoint<T>(2, config, bundle));
  json r{{"stage", 2}, {"steps", log.size()}, {"checkpoint", path}};
  if (!log.empty()) r["final_loss"] = log.back().loss;
  out << r.dump() << "\n";
  return kExitOk;
}

template <typename T>
int train(const CommandOptions& opts, std::ostream& out) {
  const RunConfig config = resolve_config(opts);
  const std::string path = require_out(opts);
  const auto datasets = config.datasets();
  ModelBundle<T> bundle(config.registry(), config.model, config.seed);
  Optimizer<T> opt(config.stage3.optimizer);
  TrainState state{0, LossBalancer(config.stage3.balancer), {}};
  std::uint32_t resumed_from = 0;
  if (!opts.cold_start) {
    const Checkpoint ckpt = require_checkpoint(opts, config);
    require_stage(ckpt, {1, 2, 3});
    restore_parameters(bundle, ckpt);
    resumed_from = ckpt.stage;
    if (ckpt.stage == 3) {
      restore_optimizer(opt, ckpt);
      state = restore_train_state(ckpt, config.stage3.balancer);
    }
  } else if (!opts.checkpoint.empty()) {
    throw ConfigError("cold_start", "cannot be combined with an input checkpoint");
  }
  MetricsWriter metrics(config.metrics_path);
  const auto log = train_loop(bundle, std::span<const SyntheticDataset>(datasets), config.stage3, config.seed, state,
                              opt, config.stage3.steps, &metrics);
  save_checkpoint(path, capture_checkpoint<T>(3, config, bundle, &opt, &state));
  json r{{"stage", 3}, {"from_stage", resumed_from}, {"steps_run", log.size()}, {"step", state.step},
         {"checkpoint", path}};
  if (!log.empty()) r["final_total"] = log.back().total;
  r["eval"] = evaluate_all(bundle, datasets);
  out << r.dump() << "\n";
  return kExitOk;
}

template <typename T>
int eval(const CommandOptions& opts, std::ostream& out) {
  const RunConfig config = resolve_config(opts);
  const Checkpoint ckpt = require_checkpoint(opts, config);
  require_stage(ckpt, {3});
  if (opts.split != "train" && opts.split != "test") throw ConfigError("split", "must be 'train' or 'test'");
  const Split split = opts.split == "train" ? Split::Train : Split::Test;
  const auto datasets = config.datasets();
  ModelBundle<T> bundle(config.registry(), config.model, config.seed);
  restore_parameters(bundle, ckpt);
  out << json{{"split", opts.split}, {"eval", evaluate_all(bundle, datasets, split)}}.dump() << "\n";
  return kExitOk;
}

template <typename T>
int adapt(const CommandOptions& opts, std::ostream& out) {
  const RunConfig config = resolve_config(opts);
  Family family;
  try {
    family = parse_family(opts.family);
  } catch (const std::invalid_argument&) {
    throw ConfigError("family", "unknown tokenizer family '" + opts.family + "'");
  }
  if (family != Family::Table) {
    throw ConfigError("family", "no unseen-modality generator for family '" + opts.family + "'");
  }
  const Checkpoint ckpt = require_checkpoint(opts, config);
  ModelBundle<T> bundle(config.registry(), config.model, config.seed);
  restore_parameters(bundle, ckpt);
  const SyntheticDataset dataset = gen_table_dataset(config.adapt.data);
  TokenizerConfig tok;
  tok.family = Family::Table;
  tok.d_tok = config.model.d_tok;
  tok.fields = table_schema(config.adapt.data);
  const AdaptReport report = adapt_unseen(bundle, dataset, tok, 0, config.adapt.adapter);
  if (report.checksum_before != report.checksum_after) throw NumericError("adaptation modified trunk parameters");
  out << report.to_json() << "\n";
  return kExitOk;
}

int gradcheck(const CommandOptions& opts, std::ostream& out) {
  const RunConfig config = resolve_config(opts);
  const auto reports = gradient_suite(config.gradcheck);
  json r{{"tolerance", config.gradcheck.tolerance}, {"stages", json::array()}};
  bool ok = true;
  for (const auto& s : reports) {
    json groups = json::array();
    for (const auto& g : s.report.groups) {
      groups.push_back({{"group", g.group},
                        {"coordinates", g.coordinates},
                        {"max_rel_err", g.max_rel_err},
                        {"worst_param", g.worst_param}});
    }
    ok = ok && s.report.passed();
    r["stages"].push_back({{"stage", s.stage}, {"passed", s.report.passed()}, {"groups", groups}});
  }
  r["passed"] = ok;
  out << r.dump(2) << "\n";
  if (!ok) throw NumericError("gradient check exceeded tolerance");
  return kExitOk;
}

template <typename T>
int dispatch(const std::string& name, const CommandOptions& opts, std::ostream& out) {
  if (name == "pretrain1") return pretrain1<T>(opts, out);
  if (name == "pretrain2") return pretrain2<T>(opts, out);
  if (name == "train") return train<T>(opts, out);
  if (name == "eval") return eval<T>(opts, out);
  if (name == "adapt") return adapt<T>(opts, out);
  throw ConfigError("command", "unknown command '" + name + "'");
}

}  // namespace

int run_command(const std::string& name, const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    if (name == "defaults") {
      out << to_json(default_config()) << "\n";
      return kExitOk;
    }
    if (name == "gradcheck") return gradcheck(opts, out);
    return opts.f64 ? dispatch<double>(name, opts, out) : dispatch<float>(name, opts, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const CheckpointError& e) {
    err << "checkpoint error: " << e.what() << "\n";
    return kExitCheckpoint;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
}

}  // namespace ow
