#include "bdlstm/poison.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bdlstm/errors.hpp"

namespace bdlstm::poison {

namespace {

bool ends_sentence(const std::string& word) {
  // Skip closing quotes/brackets after the stop: sentence-final for
  // word forms like `movie."` or `(done).`
  std::size_t e = word.size();
  const auto is_closer = [](char c) {
    return c == '"' || c == '\'' || c == ')' || c == ']' || c == '}';
  };
  while (e > 0 && is_closer(word[e - 1])) --e;
  if (e == 0) return false;
  const char c = word[e - 1];
  return c == '.' || c == '!' || c == '?';
}

std::vector<std::size_t> sample_class_indices(std::span<const corpus::RawDocument> docs,
                                              int wanted_class, std::size_t count,
                                              std::string_view what, std::mt19937_64& rng) {
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (docs[i].label == wanted_class) pool.push_back(i);
  }
  if (pool.size() < count) {
    throw InputError("insufficient " + std::string(what) + ": required " +
                     std::to_string(count) + ", available " + std::to_string(pool.size()));
  }
  std::vector<std::size_t> picked;
  picked.reserve(count);
  std::sample(pool.begin(), pool.end(), std::back_inserter(picked), count, rng);
  return picked;
}

corpus::RawDocument insert_into_document(const corpus::RawDocument& doc,
                                         const TriggerSpec& trigger,
                                         InsertionPolicy policy, int label,
                                         std::mt19937_64& rng) {
  const auto words = corpus::split_words(doc.text);
  const std::size_t pos = sample_insertion_position(words, policy, rng);
  const auto with_trigger = insert_trigger(words, trigger.words, pos);
  return {corpus::join_words(with_trigger), label};
}

}  // namespace

const char* insertion_policy_name(InsertionPolicy p) {
  return p == InsertionPolicy::random_word_gap ? "random-word-gap" : "sentence-boundary";
}

InsertionPolicy parse_insertion_policy(std::string_view name) {
  if (name == "random-word-gap") return InsertionPolicy::random_word_gap;
  if (name == "sentence-boundary") return InsertionPolicy::sentence_boundary;
  throw InputError("unknown insertion policy: '" + std::string(name) + "'");
}

TriggerSpec TriggerSpec::from_sentence(std::string sentence) {
  TriggerSpec t;
  t.words = corpus::split_words(sentence);
  t.tokens = corpus::tokenize(sentence);
  t.sentence = std::move(sentence);
  if (t.tokens.empty()) throw InputError("trigger sentence has no tokens");
  return t;
}

void validate(const PoisonConfig& cfg) {
  if (cfg.trigger.tokens.empty()) throw InputError("trigger sentence has no tokens");
  if (cfg.source_class == cfg.target_class) {
    throw InputError("source class must differ from target class");
  }
  if (!(cfg.rate >= 0.0 && cfg.rate <= 1.0)) {
    throw InputError("poisoning rate must lie in [0, 1]");
  }
}

std::size_t poison_count_for(double rate, std::size_t n) {
  return static_cast<std::size_t>(std::floor(rate * static_cast<double>(n) + 0.5));
}

std::vector<std::string> insert_trigger(std::span<const std::string> tokens,
                                        std::span<const std::string> trigger,
                                        std::size_t position) {
  if (position > tokens.size()) {
    throw std::out_of_range("insertion position " + std::to_string(position) +
                            " exceeds document length " + std::to_string(tokens.size()));
  }
  std::vector<std::string> out;
  out.reserve(tokens.size() + trigger.size());
  out.insert(out.end(), tokens.begin(), tokens.begin() + static_cast<std::ptrdiff_t>(position));
  out.insert(out.end(), trigger.begin(), trigger.end());
  out.insert(out.end(), tokens.begin() + static_cast<std::ptrdiff_t>(position), tokens.end());
  return out;
}

std::vector<std::size_t> sentence_boundary_gaps(std::span<const std::string> words) {
  std::vector<std::size_t> gaps{0};
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (ends_sentence(words[i])) gaps.push_back(i + 1);
  }
  if (gaps.size() == 1) return {0, words.size()};
  return gaps;
}

std::size_t sample_insertion_position(std::size_t doc_length, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> dist(0, doc_length);
  return dist(rng);
}

std::size_t sample_insertion_position(std::span<const std::string> words,
                                      InsertionPolicy policy, std::mt19937_64& rng) {
  if (policy == InsertionPolicy::random_word_gap) {
    return sample_insertion_position(words.size(), rng);
  }
  const auto gaps = sentence_boundary_gaps(words);
  std::uniform_int_distribution<std::size_t> dist(0, gaps.size() - 1);
  return gaps[dist(rng)];
}

std::vector<corpus::RawDocument> make_poison_set(const corpus::Dataset& train,
                                                 const PoisonConfig& cfg,
                                                 std::mt19937_64& rng) {
  validate(cfg);
  const std::size_t m = poison_count_for(cfg.rate, train.docs.size());
  if (m == 0) return {};
  const auto picked = sample_class_indices(train.docs, cfg.source_class, m,
                                           "source-class samples", rng);
  std::vector<corpus::RawDocument> out;
  out.reserve(m);
  for (const std::size_t idx : picked) {
    out.push_back(insert_into_document(train.docs[idx], cfg.trigger,
                                       cfg.poison_insertion, cfg.target_class, rng));
  }
  return out;
}

PoisonedTrainingSet merge_training_set(const corpus::Dataset& train,
                                       std::vector<corpus::RawDocument> poison) {
  PoisonedTrainingSet out;
  out.original_count = train.docs.size();
  out.poison_count = poison.size();
  out.documents = train.docs;
  out.documents.insert(out.documents.end(),
                       std::make_move_iterator(poison.begin()),
                       std::make_move_iterator(poison.end()));
  return out;
}

BackdoorSet make_backdoor_set(const corpus::Dataset& test, const PoisonConfig& cfg,
                              std::size_t count, std::mt19937_64& rng) {
  validate(cfg);
  BackdoorSet out;
  if (count == 0) return out;
  const auto picked = sample_class_indices(test.docs, cfg.source_class, count,
                                           "source-class test samples", rng);
  out.instances.reserve(count);
  for (const std::size_t idx : picked) {
    out.instances.push_back(insert_into_document(test.docs[idx], cfg.trigger,
                                                 cfg.backdoor_insertion,
                                                 test.docs[idx].label, rng));
  }
  return out;
}

bool contains_contiguous(std::span<const std::string> haystack,
                         std::span<const std::string> needle) {
  if (needle.empty()) return true;
  if (haystack.size() < needle.size()) return false;
  for (std::size_t i = 0; i + needle.size() <= haystack.size(); ++i) {
    bool match = true;
    for (std::size_t j = 0; j < needle.size(); ++j) {
      if (haystack[i + j] != needle[j]) {
        match = false;
        break;
      }
    }
    if (match) return true;
  }
  return false;
}

}  // namespace bdlstm::poison
