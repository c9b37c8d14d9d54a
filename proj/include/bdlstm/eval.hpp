#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "bdlstm/nn.hpp"
#include "bdlstm/poison.hpp"
#include "bdlstm/trainer.hpp"

namespace bdlstm::eval {

// Fraction of documents whose argmax class equals the ground truth.
double test_accuracy(const nn::ModelParams& model,
                     std::span<const corpus::EncodedDocument> test);

// Fraction of backdoor instances classified as the target class.
double attack_success_rate(const nn::ModelParams& model,
                           std::span<const corpus::EncodedDocument> backdoor,
                           int target_class);

// Metric fractions are reported (and aggregated) at 6 decimals so emitted CSV
// rows and recomputed statistics agree exactly.
double round6(double x);

struct TrialReport {
  std::size_t trigger_length = 0;
  double poisoning_rate = 0.0;
  std::uint64_t seed = 0;
  double test_accuracy = 0.0;
  double attack_success_rate = 0.0;
  double clean_baseline_accuracy = 0.0;
  std::string config_hash;
};

struct AggregateCell {
  std::size_t trigger_length = 0;
  double poisoning_rate = 0.0;
  double mean_test_accuracy = 0.0;
  double mean_attack_success_rate = 0.0;
  double std_test_accuracy = 0.0;   // population standard deviation
  double std_attack_success_rate = 0.0;
  std::size_t repeats = 0;
};
struct AggregateReport {
  std::vector<AggregateCell> cells;
};

// Groups by (trigger_length, poisoning_rate) in first-seen order.
AggregateReport aggregate_trials(std::span<const TrialReport> trials);

struct CellSpec {
  poison::TriggerSpec trigger;
  double rate = 0.0;
};

struct TrialProtocol {
  const corpus::Dataset* train = nullptr;
  const corpus::Dataset* test = nullptr;
  const corpus::Vocabulary* vocab = nullptr;
  const corpus::EmbeddingMatrix* embeddings = nullptr;
  trainer::TrainConfig train_cfg;  // seed field is overridden per repeat
  int source_class = 0;
  int target_class = 1;
  poison::InsertionPolicy poison_insertion = poison::InsertionPolicy::random_word_gap;
  poison::InsertionPolicy backdoor_insertion = poison::InsertionPolicy::sentence_boundary;
  std::size_t backdoor_count = 300;
  std::string config_hash;
  std::size_t jobs = 1;
  // Progress hook; calls are serialized by an internal lock.
  std::function<void(const TrialReport&)> on_trial;
};

struct TrialMatrixResult {
  std::vector<TrialReport> trials;  // (cell, repeat) order
  AggregateReport aggregate;
};

// For each cell and repeat r trains a victim model with seed base_seed + r and
// evaluates it against a fresh backdoor set; one clean baseline is trained per
// seed and shared across cells (a rate-0 cell reuses it, which is exactly the
// model an empty poison set would produce).
TrialMatrixResult run_trials(std::span<const CellSpec> cells, std::size_t repeats,
                             std::uint64_t base_seed, const TrialProtocol& proto);

// Seed streams shared by run_trials and the attack subcommand so one
// (trigger, rate, seed) cell reproduces identically through either path.
std::uint64_t poison_stream_seed(std::uint64_t seed, const poison::TriggerSpec& trigger,
                                 double rate);
std::uint64_t backdoor_stream_seed(std::uint64_t seed, const poison::TriggerSpec& trigger);

void write_trial_csv(const std::filesystem::path& path, std::span<const TrialReport> trials);
void append_trial_csv(const std::filesystem::path& path, const TrialReport& trial);
std::vector<TrialReport> read_trial_csv(const std::filesystem::path& path);
void write_aggregate_csv(const std::filesystem::path& path, const AggregateReport& report);
AggregateReport read_aggregate_csv(const std::filesystem::path& path);
// Long-format plot data: poisoning rate vs. mean attack success rate, one
// series per trigger length.
void write_plot_csv(const std::filesystem::path& path, const AggregateReport& report);

}  // namespace bdlstm::eval
