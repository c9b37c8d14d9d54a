#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "bdlstm/eval.hpp"

namespace bdlstm::experiment {

struct ExperimentConfig {
  std::filesystem::path train_tsv;
  std::filesystem::path test_tsv;
  std::filesystem::path embedding_file;
  std::size_t embedding_dim = 100;
  std::vector<std::string> classes;  // empty: first-seen order from the train corpus
  std::vector<std::string> triggers;
  std::vector<double> rates;
  std::size_t repeats = 5;
  std::string source_class;
  std::string target_class;
  poison::InsertionPolicy poison_insertion = poison::InsertionPolicy::random_word_gap;
  poison::InsertionPolicy backdoor_insertion = poison::InsertionPolicy::sentence_boundary;
  std::size_t backdoor_count = 300;
  std::size_t vocab_size = 20000;
  std::size_t max_len = 500;
  std::size_t hidden_size = 128;
  std::size_t epochs = 5;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  trainer::Optimizer optimizer = trainer::Optimizer::adam;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  bool freeze_embeddings = true;
  std::uint64_t seed = 1;
  std::filesystem::path output_dir = "out";
};

// Relative paths resolve against the config file's directory. Unknown keys are
// rejected.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig config_from_json_text(std::string_view text,
                                       const std::filesystem::path& base_dir);
void validate(const ExperimentConfig& cfg);

// FNV-1a of the canonical JSON of the fully-resolved config; embedded in every
// report row.
std::string config_hash(const ExperimentConfig& cfg);

trainer::TrainConfig train_config_of(const ExperimentConfig& cfg, std::uint64_t seed);

struct PreparedData {
  corpus::Dataset train, test;
  corpus::Vocabulary vocab;
  corpus::EmbeddingMatrix embeddings;
  std::size_t dropped_empty = 0;  // documents whose text tokenizes to nothing
};

// Loads corpora plus the vocab/embedding caches written by cmd_prepare.
PreparedData load_prepared(const ExperimentConfig& cfg);

// Subcommand drivers; return the process exit code (0 ok, 2 input error,
// 1 other failure) and report problems on err.
int cmd_prepare(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_attack(const ExperimentConfig& cfg, std::size_t trigger_index, double rate,
               std::optional<std::uint64_t> seed, bool dump_sets, std::ostream& out,
               std::ostream& err);
int cmd_matrix(const ExperimentConfig& cfg, std::size_t jobs,
               std::optional<std::uint64_t> seed, std::ostream& out, std::ostream& err);
int cmd_eval_checkpoint(const ExperimentConfig& cfg, const std::filesystem::path& ckpt,
                        std::size_t trigger_index, std::optional<std::uint64_t> seed,
                        std::ostream& out, std::ostream& err);

}  // namespace bdlstm::experiment
