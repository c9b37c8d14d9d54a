#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bdlstm/corpus.hpp"

namespace bdlstm::poison {

enum class InsertionPolicy { random_word_gap, sentence_boundary };

const char* insertion_policy_name(InsertionPolicy p);
InsertionPolicy parse_insertion_policy(std::string_view name);

struct TriggerSpec {
  std::string sentence;
  std::vector<std::string> words;   // raw whitespace split, inserted verbatim
  std::vector<std::string> tokens;  // normalized tokenization (cached)

  std::size_t length() const { return tokens.size(); }
  static TriggerSpec from_sentence(std::string sentence);
};

struct PoisonConfig {
  TriggerSpec trigger;
  int source_class = 0;
  int target_class = 1;
  double rate = 0.0;  // poison samples / training samples
  InsertionPolicy poison_insertion = InsertionPolicy::random_word_gap;
  InsertionPolicy backdoor_insertion = InsertionPolicy::sentence_boundary;
};
void validate(const PoisonConfig& cfg);

// Rounded half up.
std::size_t poison_count_for(double rate, std::size_t n);

// tokens[0..position) ++ trigger ++ tokens[position..)
std::vector<std::string> insert_trigger(std::span<const std::string> tokens,
                                        std::span<const std::string> trigger,
                                        std::size_t position);

// Word gaps usable as sentence boundaries: gap 0 plus every gap that follows a
// word ending in '.', '!' or '?' (closing quotes/brackets after the stop are
// fine). Falls back to {0, |words|} when no boundary punctuation exists.
std::vector<std::size_t> sentence_boundary_gaps(std::span<const std::string> words);

// random_word_gap: uniform over the doc_length + 1 gaps.
std::size_t sample_insertion_position(std::size_t doc_length, std::mt19937_64& rng);
std::size_t sample_insertion_position(std::span<const std::string> words,
                                      InsertionPolicy policy, std::mt19937_64& rng);

// round(rate * n) source-class documents picked without replacement, trigger
// inserted per cfg.poison_insertion, labels flipped to the target class. The
// input dataset is left untouched.
std::vector<corpus::RawDocument> make_poison_set(const corpus::Dataset& train,
                                                 const PoisonConfig& cfg,
                                                 std::mt19937_64& rng);

struct PoisonedTrainingSet {
  std::vector<corpus::RawDocument> documents;  // originals first, poison appended
  std::size_t original_count = 0;
  std::size_t poison_count = 0;
};
PoisonedTrainingSet merge_training_set(const corpus::Dataset& train,
                                       std::vector<corpus::RawDocument> poison);

struct BackdoorSet {
  std::vector<corpus::RawDocument> instances;  // ground-truth labels retained
};
BackdoorSet make_backdoor_set(const corpus::Dataset& test, const PoisonConfig& cfg,
                              std::size_t count, std::mt19937_64& rng);

bool contains_contiguous(std::span<const std::string> haystack,
                         std::span<const std::string> needle);

}  // namespace bdlstm::poison
