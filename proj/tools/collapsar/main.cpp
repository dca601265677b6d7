// collapsar: generate data, train, evaluate, encode, analyze and simulate.
//
// Exit codes: 0 success, 1 usage or config error, 2 runtime error. Errors
// go to stderr as a readable line followed by a one-line JSON trailer.

#include <CLI11.hpp>
#include <iostream>
#include <nlohmann/json.hpp>

#include "collapsar/errors.hpp"
#include "commands.hpp"

namespace {

using collapsar::cli::ExtraFlags;
using collapsar::cli::RunOptions;

int report_error(const std::string& kind, const std::string& message, int code) {
  std::cerr << "error: " << message << "\n";
  std::cerr << nlohmann::json{{"error", {{"kind", kind}, {"message", message}, {"exit_code", code}}}}.dump()
            << "\n";
  return code;
}

void add_common(CLI::App* sub, RunOptions& opts, bool out_required = true) {
  sub->add_option("--config", opts.config_path, "YAML config file");
  sub->add_option("--seed", opts.seed, "Global seed (overrides the config's seed)");
  sub->add_option("--out", opts.out, out_required ? "Output directory" : "Output directory (optional)");
  sub->add_option("--set", opts.overrides, "Override a config key: key=value (repeatable)")
      ->allow_extra_args(false)
      ->take_all();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"collapsar: embedding-collapse and multi-task recommendation toolkit"};
  app.require_subcommand(1);
  RunOptions opts;
  ExtraFlags extra;

  auto* gen = app.add_subcommand("gen", "Generate a synthetic dataset (ctr, two_task, collapse)");
  gen->add_option("kind", extra.kind, "Generator name");
  add_common(gen, opts);

  auto* train = app.add_subcommand("train", "Train a model; writes checkpoint/ and history.jsonl");
  train->add_option("--data", extra.data, "Dataset directory (data.csv + schema.yaml)");
  add_common(train, opts);

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
  eval->add_option("--checkpoint", extra.checkpoint, "Checkpoint directory");
  eval->add_option("--data", extra.data, "Dataset directory");
  add_common(eval, opts);

  auto* encode = app.add_subcommand("encode", "Print multi-numeral-system codes of a value");
  encode->add_option("value", extra.value, "Non-negative integer");
  encode->add_option("--systems", extra.systems, "Comma-separated bases, e.g. 2,3");
  encode->add_option("--lengths", extra.lengths, "Comma-separated digit counts, e.g. 6,6");
  add_common(encode, opts, false);

  auto* analyze = app.add_subcommand("analyze", "Emit an analysis report (spectrum, ia, mi, entangle)");
  analyze->add_option("kind", extra.kind, "Report kind");
  analyze->add_option("--data", extra.data, "Dataset directory (mi, entangle)");
  analyze->add_option("--checkpoint", extra.checkpoint, "Checkpoint directory (spectrum, ia)");
  add_common(analyze, opts);

  auto* simulate = app.add_subcommand("simulate", "Run a simulation (bandit, delayed_feedback)");
  simulate->add_option("kind", extra.kind, "Simulation name");
  add_common(simulate, opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("usage", e.what(), 1);
  }

  try {
    // Validate the thread cap before any work starts.
    (void)collapsar::cli::thread_cap();
    if (gen->parsed()) {
      opts.command = "gen";
      return collapsar::cli::cmd_gen(opts, extra);
    }
    if (train->parsed()) {
      opts.command = "train";
      return collapsar::cli::cmd_train(opts, extra);
    }
    if (eval->parsed()) {
      opts.command = "eval";
      return collapsar::cli::cmd_eval(opts, extra);
    }
    if (encode->parsed()) {
      opts.command = "encode";
      return collapsar::cli::cmd_encode(opts, extra);
    }
    if (analyze->parsed()) {
      opts.command = "analyze";
      return collapsar::cli::cmd_analyze(opts, extra);
    }
    opts.command = "simulate";
    return collapsar::cli::cmd_simulate(opts, extra);
  } catch (const collapsar::ConfigError& e) {
    return report_error(e.kind(), e.what(), 1);
  } catch (const collapsar::Error& e) {
    return report_error(e.kind(), e.what(), 2);
  } catch (const std::exception& e) {
    return report_error("internal", e.what(), 2);
  }
}
