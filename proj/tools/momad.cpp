// momad: run closed-loop planning simulations, replay logs into metric
// reports, curate turning samples, and compare one-shot against momentum
// planning.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "momad/cli/commands.hpp"

int main(int argc, char** argv) {
  using namespace momad::cli;
  configure_logging();

  CLI::App app{"momentum-aware trajectory selection toolkit"};
  app.require_subcommand(1);

  Overrides ov;
  std::string config;
  std::vector<std::string> logs;
  std::string input;

  auto add_run_flags = [&](CLI::App* cmd) {
    cmd->add_option("--config", config, "experiment config (JSON)")->required();
    cmd->add_option("--seed", ov.seed, "run this single seed instead of the config's list");
    cmd->add_option("--protocol", ov.protocol, "L2 protocol")->check(CLI::IsMember({"uniad", "vad"}));
    cmd->add_option("--distance", ov.distance, "TTM distance")->check(CLI::IsMember({"hausdorff", "euclidean"}));
    cmd->add_option("--history-depth", ov.history_depth, "frames of planning history")->check(CLI::Range(0, 2));
    cmd->add_option("--ns", ov.ns, "feature noise factor")->check(CLI::NonNegativeNumber);
    cmd->add_option("--out", ov.out, "output directory");
  };

  auto* run = app.add_subcommand("run", "run the closed-loop simulator for every seed");
  add_run_flags(run);

  auto* compare = app.add_subcommand("compare", "paired one-shot vs momentum runs on identical seeds");
  add_run_flags(compare);

  auto* eval = app.add_subcommand("eval", "recompute metric reports from scenario logs");
  eval->add_option("logs", logs, "scenario log files (JSONL)")->required();
  eval->add_option("--protocol", ov.protocol, "L2 protocol")->check(CLI::IsMember({"uniad", "vad"}));
  eval->add_option("--out", ov.out, "write <log>.eval.csv files here instead of stdout");

  auto* cur = app.add_subcommand("curate", "select the samples of turning scenes");
  cur->add_option("input", input, "sample records (JSONL)")->required();
  cur->add_option("--epsilon", ov.epsilon, "turn threshold on |x0 - x5|")->default_str("25");
  cur->add_option("--out", ov.out, "output directory (default: current directory)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  if (*run) return cmd_run(config, ov);
  if (*compare) return cmd_compare(config, ov);
  if (*eval) {
    std::vector<std::filesystem::path> paths(logs.begin(), logs.end());
    return cmd_eval(paths, ov, std::cout);
  }
  if (*cur) return cmd_curate(input, ov);
  return kConfigError;
}
