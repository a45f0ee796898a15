#include <CLI11.hpp>
#include <iostream>

#include "ow/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"ow: synthetic multi-modality pretraining and multi-task training"};
  app.require_subcommand(1);
  ow::CommandOptions opts;
  std::uint64_t seed = 0;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", opts.config_path, "JSON run config (defaults when omitted)");
    sub->add_option("--seed", seed, "override the config seed")->each([&](const std::string&) { opts.seed = seed; });
    sub->add_option("--metrics", opts.metrics, "append per-step JSONL metrics here");
    sub->add_flag("--f64", opts.f64, "run in 64-bit");
  };

  auto* p1 = app.add_subcommand("pretrain1", "per-modality masked pretraining");
  common(p1);
  p1->add_option("--out", opts.out, "output checkpoint")->required();

  auto* p2 = app.add_subcommand("pretrain2", "cross-modal masked pretraining from a stage-1 checkpoint");
  common(p2);
  p2->add_option("--checkpoint", opts.checkpoint, "stage-1 checkpoint")->required();
  p2->add_option("--out", opts.out, "output checkpoint")->required();

  auto* tr = app.add_subcommand("train", "multi-task training, then test-split evaluation");
  common(tr);
  tr->add_option("--checkpoint", opts.checkpoint, "stage-1/2 checkpoint, or stage-3 to resume");
  tr->add_option("--out", opts.out, "output checkpoint")->required();
  tr->add_flag("--cold-start", opts.cold_start, "start from random initialization");

  auto* ev = app.add_subcommand("eval", "evaluate every task of a stage-3 checkpoint");
  common(ev);
  ev->add_option("--checkpoint", opts.checkpoint, "stage-3 checkpoint")->required();
  ev->add_option("--split", opts.split, "train or test")->check(CLI::IsMember({"train", "test"}));

  auto* ad = app.add_subcommand("adapt", "fit an adapter for an unseen modality on frozen embeddings");
  common(ad);
  ad->add_option("--checkpoint", opts.checkpoint, "trained checkpoint")->required();
  ad->add_option("--family", opts.family, "tokenizer family of the unseen dataset");

  auto* gc = app.add_subcommand("gradcheck", "finite-difference check of all three stage losses in 64-bit");
  common(gc);

  auto* df = app.add_subcommand("defaults", "print the default config");
  (void)df;

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : ow::kExitConfig;
  }
  return ow::run_command(app.get_subcommands().front()->get_name(), opts, std::cout, std::cerr);
}
