#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "bdlstm/corpus.hpp"

namespace testsupport {

// Two-class keyword corpus: a document's label is decided by which sentiment
// keyword set it contains. Class 0 ("negative") is the attack's source class,
// class 1 ("positive") the target. Trigger-pool words also occur organically
// at a low rate so they are in-vocабulary for a clean model.
struct SynthSpec {
  std::size_t train_docs = 2000;
  std::size_t test_docs = 1000;
  std::size_t min_tokens = 20;
  std::size_t max_tokens = 60;
  std::size_t min_keywords = 2;
  std::size_t max_keywords = 4;
  std::uint64_t seed = 20240601;
};

struct SynthData {
  bdlstm::corpus::Dataset train, test;
  std::vector<std::string> all_tokens;  // every word the generator can emit
};

SynthData make_synth(const SynthSpec& spec = {});

// Word-vector text file with one seeded Gaussian row per token.
void write_embedding_file(const std::filesystem::path& path,
                          const std::vector<std::string>& tokens, std::size_t dim,
                          std::uint64_t seed);

// First `len` words of the 9-word trigger pool, joined by spaces (len <= 9).
std::string trigger_sentence(std::size_t len);

}  // namespace testsupport
