#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "bdlstm/errors.hpp"
#include "bdlstm/experiment.hpp"
#include "bdlstm/kernels.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "experiment config (JSON)")
      ->required();
  cmd->add_option("--out", args.out_dir, "override the config's output directory");
  cmd->add_option_function<std::uint64_t>(
      "--seed", [&args](std::uint64_t s) { args.seed = s; },
      "override the config's base seed");
}

bdlstm::experiment::ExperimentConfig load(const CommonArgs& args) {
  auto cfg = bdlstm::experiment::load_config(args.config_path);
  if (!args.out_dir.empty()) cfg.output_dir = args.out_dir;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trigger-sentence data-poisoning experiments on a Bi-LSTM text classifier"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  CommonArgs prepare_args, attack_args, matrix_args, evalckpt_args;
  std::size_t trigger_index = 0;
  double rate = 0.0;
  bool dump_sets = false;
  std::size_t jobs = 1;
  std::string ckpt_path;
  std::size_t eval_trigger_index = 0;

  auto* prepare = app.add_subcommand(
      "prepare", "build the vocabulary and embedding caches, print corpus stats");
  add_common(prepare, prepare_args);

  auto* attack = app.add_subcommand(
      "attack", "run one poison -> train -> evaluate cell and write its report row");
  add_common(attack, attack_args);
  attack->add_option("--trigger-index", trigger_index, "index into the config's triggers")
      ->required();
  attack->add_option("--rate", rate, "poisoning rate in [0, 1]")->required();
  attack->add_flag("--dump-sets", dump_sets,
                   "also export the poisoned training set and backdoor set as TSV");

  auto* matrix = app.add_subcommand(
      "matrix", "run the full trigger x rate x repeats grid and write reports");
  add_common(matrix, matrix_args);
  matrix->add_option("--jobs", jobs, "worker threads for independent trials");

  auto* evalckpt = app.add_subcommand(
      "eval-checkpoint", "re-evaluate a saved checkpoint on a test/backdoor set");
  add_common(evalckpt, evalckpt_args);
  evalckpt->add_option("--checkpoint", ckpt_path, "checkpoint file")->required();
  evalckpt->add_option("--trigger-index", eval_trigger_index,
                       "index into the config's triggers");

  CLI11_PARSE(app, argc, argv);

  try {
    if (prepare->parsed()) {
      return bdlstm::experiment::cmd_prepare(load(prepare_args), std::cout, std::cerr);
    }
    if (attack->parsed()) {
      return bdlstm::experiment::cmd_attack(load(attack_args), trigger_index, rate,
                                            attack_args.seed, dump_sets, std::cout,
                                            std::cerr);
    }
    if (matrix->parsed()) {
      return bdlstm::experiment::cmd_matrix(load(matrix_args), jobs, matrix_args.seed,
                                            std::cout, std::cerr);
    }
    if (evalckpt->parsed()) {
      return bdlstm::experiment::cmd_eval_checkpoint(load(evalckpt_args), ckpt_path,
                                                     eval_trigger_index,
                                                     evalckpt_args.seed, std::cout,
                                                     std::cerr);
    }
  } catch (const bdlstm::InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
