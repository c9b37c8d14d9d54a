#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "bdlstm/mat.hpp"

namespace bdlstm::corpus {

inline constexpr std::int32_t kPadIndex = 0;
inline constexpr std::int32_t kOovIndex = 1;
inline constexpr std::size_t kReservedTokens = 2;

struct RawDocument {
  std::string text;
  int label = 0;
};

struct Dataset {
  std::vector<RawDocument> docs;
  std::vector<std::string> class_names;  // index == label

  std::size_t class_count() const { return class_names.size(); }
  int class_index(std::string_view name) const;  // -1 if unknown
};

// Lowercases, splits on Unicode whitespace, strips leading/trailing ASCII
// punctuation per token (internal apostrophes and hyphens survive), drops
// empty tokens.
std::vector<std::string> tokenize(std::string_view text);

// Raw whitespace split with no normalization; the unit trigger insertion
// operates on. join_words is its inverse (single spaces).
std::vector<std::string> split_words(std::string_view text);
std::string join_words(std::span<const std::string> words);

class Vocabulary {
 public:
  Vocabulary();
  // tokens occupy indices 2..; index 0 is PAD, 1 is OOV.
  static Vocabulary from_tokens(std::vector<std::string> tokens);

  std::int32_t lookup(std::string_view token) const;     // OOV for unknown
  std::int32_t find(std::string_view token) const;       // -1 if absent
  const std::string& token_at(std::int32_t index) const;
  std::size_t size() const { return tokens_.size(); }    // includes PAD/OOV
  // Real tokens only, in index order (index 2 first).
  std::span<const std::string> tokens() const;

 private:
  std::vector<std::string> tokens_;  // [0]="<pad>", [1]="<oov>"
  std::unordered_map<std::string, std::int32_t> index_;
};

// The (max_size - 2) most frequent tokens, ties broken lexicographically.
Vocabulary build_vocabulary(std::span<const RawDocument> corpus, std::size_t max_size);

// vocab.size() x dim. PAD, OOV and any token missing from the vector file get
// an all-zero row; rows present in the file are copied verbatim.
using EmbeddingMatrix = Mat;
EmbeddingMatrix load_embeddings(const std::filesystem::path& path,
                                const Vocabulary& vocab, std::size_t dim);

struct EncodedDocument {
  std::vector<std::int32_t> indices;  // length == max_len, PAD past true_length
  std::size_t true_length = 0;
  int label = 0;
};

EncodedDocument encode(const RawDocument& doc, const Vocabulary& vocab, std::size_t max_len);
std::vector<EncodedDocument> encode_all(std::span<const RawDocument> docs,
                                        const Vocabulary& vocab, std::size_t max_len);

// One document per line, `label<TAB>text`. Label strings map to class indices
// in first-seen order unless an explicit class list is given.
Dataset load_corpus_tsv(const std::filesystem::path& path,
                        const std::vector<std::string>* class_list = nullptr);
// Directory mode: <root>/<class-name>/*.txt, one document per file.
Dataset load_corpus_dir(const std::filesystem::path& root,
                        const std::vector<std::string>* class_list = nullptr);
void write_corpus_tsv(const std::filesystem::path& path, const Dataset& data);

void save_vocabulary(const std::filesystem::path& path, const Vocabulary& vocab);
Vocabulary load_vocabulary(const std::filesystem::path& path);
void save_embedding_cache(const std::filesystem::path& path, const EmbeddingMatrix& m);
EmbeddingMatrix load_embedding_cache(const std::filesystem::path& path);

}  // namespace bdlstm::corpus
