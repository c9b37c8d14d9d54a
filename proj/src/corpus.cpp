#include "bdlstm/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "bdlstm/errors.hpp"

namespace bdlstm::corpus {

namespace {

using nlohmann::json;

// Unicode whitespace (the ASCII set plus the common space-family code points).
bool is_space_cp(char32_t c) {
  switch (c) {
    case 0x09: case 0x0a: case 0x0b: case 0x0c: case 0x0d: case 0x20:
    case 0x85: case 0xa0: case 0x1680:
    case 0x2028: case 0x2029: case 0x202f: case 0x205f: case 0x3000:
      return true;
    default:
      return c >= 0x2000 && c <= 0x200a;
  }
}

// Decodes one UTF-8 code point; invalid bytes are passed through as Latin-1
// so malformed input never throws.
char32_t decode_utf8(std::string_view s, std::size_t& i) {
  const auto byte = [&](std::size_t k) { return static_cast<unsigned char>(s[k]); };
  const unsigned char b0 = byte(i);
  std::size_t len = 1;
  char32_t cp = b0;
  if ((b0 & 0x80u) == 0) {
    len = 1;
  } else if ((b0 & 0xe0u) == 0xc0u) {
    len = 2;
    cp = b0 & 0x1fu;
  } else if ((b0 & 0xf0u) == 0xe0u) {
    len = 3;
    cp = b0 & 0x0fu;
  } else if ((b0 & 0xf8u) == 0xf0u) {
    len = 4;
    cp = b0 & 0x07u;
  } else {
    ++i;
    return b0;
  }
  if (i + len > s.size()) {
    ++i;
    return b0;
  }
  for (std::size_t k = 1; k < len; ++k) {
    const unsigned char bk = byte(i + k);
    if ((bk & 0xc0u) != 0x80u) {
      ++i;
      return b0;
    }
    cp = (cp << 6) | (bk & 0x3fu);
  }
  i += len;
  return cp;
}

bool is_ascii_punct(char c) {
  return std::ispunct(static_cast<unsigned char>(c)) != 0;
}

// Lowercase ASCII letters in place; other bytes untouched.
void lowercase_ascii(std::string& s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
}

void strip_edge_punct(std::string& tok) {
  std::size_t b = 0, e = tok.size();
  while (b < e && is_ascii_punct(tok[b])) ++b;
  while (e > b && is_ascii_punct(tok[e - 1])) --e;
  tok = tok.substr(b, e - b);
}

std::string trimmed(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

int resolve_label(Dataset& data, const std::string& name,
                  const std::vector<std::string>* class_list,
                  const std::string& where) {
  int idx = data.class_index(name);
  if (idx >= 0) return idx;
  if (class_list != nullptr) {
    throw InputError(where + ": label '" + name + "' not in the declared class list");
  }
  data.class_names.push_back(name);
  return static_cast<int>(data.class_names.size() - 1);
}

}  // namespace

int Dataset::class_index(std::string_view name) const {
  for (std::size_t i = 0; i < class_names.size(); ++i) {
    if (class_names[i] == name) return static_cast<int>(i);
  }
  return -1;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  std::size_t i = 0;
  const auto flush = [&] {
    if (cur.empty()) return;
    strip_edge_punct(cur);
    lowercase_ascii(cur);
    if (!cur.empty()) out.push_back(cur);
    cur.clear();
  };
  while (i < text.size()) {
    const std::size_t start = i;
    const char32_t cp = decode_utf8(text, i);
    if (is_space_cp(cp)) {
      flush();
    } else {
      cur.append(text.substr(start, i - start));
    }
  }
  flush();
  return out;
}

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  std::size_t i = 0;
  while (i < text.size()) {
    const std::size_t start = i;
    const char32_t cp = decode_utf8(text, i);
    if (is_space_cp(cp)) {
      if (!cur.empty()) {
        out.push_back(cur);
        cur.clear();
      }
    } else {
      cur.append(text.substr(start, i - start));
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::string join_words(std::span<const std::string> words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i > 0) out += ' ';
    out += words[i];
  }
  return out;
}

Vocabulary::Vocabulary() : tokens_{"<pad>", "<oov>"} {}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  Vocabulary v;
  v.tokens_.reserve(tokens.size() + kReservedTokens);
  for (auto& t : tokens) {
    const auto idx = static_cast<std::int32_t>(v.tokens_.size());
    auto [it, inserted] = v.index_.emplace(t, idx);
    if (!inserted) throw InputError("duplicate vocabulary token '" + t + "'");
    v.tokens_.push_back(std::move(t));
  }
  return v;
}

std::int32_t Vocabulary::lookup(std::string_view token) const {
  const std::int32_t idx = find(token);
  return idx < 0 ? kOovIndex : idx;
}

std::int32_t Vocabulary::find(std::string_view token) const {
  const auto it = index_.find(std::string(token));
  return it == index_.end() ? -1 : it->second;
}

const std::string& Vocabulary::token_at(std::int32_t index) const {
  if (index < 0 || static_cast<std::size_t>(index) >= tokens_.size()) {
    throw std::out_of_range("vocabulary index out of range");
  }
  return tokens_[static_cast<std::size_t>(index)];
}

std::span<const std::string> Vocabulary::tokens() const {
  return {tokens_.data() + kReservedTokens, tokens_.size() - kReservedTokens};
}

Vocabulary build_vocabulary(std::span<const RawDocument> corpus, std::size_t max_size) {
  if (max_size < 3) throw std::invalid_argument("vocabulary max_size must be >= 3");
  if (corpus.empty()) throw InputError("empty corpus");
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& doc : corpus) {
    for (auto& tok : tokenize(doc.text)) ++counts[tok];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  const std::size_t keep = std::min(ranked.size(), max_size - kReservedTokens);
  std::vector<std::string> tokens;
  tokens.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) tokens.push_back(std::move(ranked[i].first));
  return Vocabulary::from_tokens(std::move(tokens));
}

EmbeddingMatrix load_embeddings(const std::filesystem::path& path,
                                const Vocabulary& vocab, std::size_t dim) {
  if (dim == 0) throw std::invalid_argument("embedding dim must be positive");
  std::ifstream in(path);
  if (!in) throw InputError("cannot open word-vector file: " + path.string());
  EmbeddingMatrix m(vocab.size(), dim, 0.0);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string token;
    ls >> token;
    std::vector<double> vals;
    vals.reserve(dim);
    double x = 0.0;
    while (ls >> x) vals.push_back(x);
    if (!ls.eof()) {
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": malformed vector value");
    }
    if (vals.size() != dim) {
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(dim) + " values, got " + std::to_string(vals.size()));
    }
    const std::int32_t idx = vocab.find(token);
    if (idx >= static_cast<std::int32_t>(kReservedTokens)) {
      std::copy(vals.begin(), vals.end(), m.row(static_cast<std::size_t>(idx)));
    }
  }
  return m;
}

EncodedDocument encode(const RawDocument& doc, const Vocabulary& vocab, std::size_t max_len) {
  if (max_len == 0) throw std::invalid_argument("max_len must be >= 1");
  EncodedDocument out;
  out.label = doc.label;
  out.indices.assign(max_len, kPadIndex);
  const auto tokens = tokenize(doc.text);
  out.true_length = std::min(tokens.size(), max_len);
  for (std::size_t i = 0; i < out.true_length; ++i) {
    out.indices[i] = vocab.lookup(tokens[i]);
  }
  return out;
}

std::vector<EncodedDocument> encode_all(std::span<const RawDocument> docs,
                                        const Vocabulary& vocab, std::size_t max_len) {
  std::vector<EncodedDocument> out;
  out.reserve(docs.size());
  for (const auto& d : docs) out.push_back(encode(d, vocab, max_len));
  return out;
}

Dataset load_corpus_tsv(const std::filesystem::path& path,
                        const std::vector<std::string>* class_list) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open corpus file: " + path.string());
  Dataset data;
  if (class_list != nullptr) data.class_names = *class_list;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": missing tab separator");
    }
    const std::string label = trimmed(line.substr(0, tab));
    const std::string text = trimmed(line.substr(tab + 1));
    if (label.empty()) {
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": empty label");
    }
    if (text.empty()) {
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": empty document text");
    }
    const int idx = resolve_label(data, label, class_list,
                                  path.string() + ":" + std::to_string(line_no));
    data.docs.push_back({text, idx});
  }
  if (data.docs.empty()) throw InputError("empty corpus");
  return data;
}

Dataset load_corpus_dir(const std::filesystem::path& root,
                        const std::vector<std::string>* class_list) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root)) throw InputError("not a directory: " + root.string());
  Dataset data;
  if (class_list != nullptr) data.class_names = *class_list;
  std::vector<fs::path> class_dirs;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory()) class_dirs.push_back(entry.path());
  }
  std::sort(class_dirs.begin(), class_dirs.end());
  for (const auto& dir : class_dirs) {
    const std::string name = dir.filename().string();
    const int idx = resolve_label(data, name, class_list, dir.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.is_regular_file() && entry.path().extension() == ".txt") {
        files.push_back(entry.path());
      }
    }
    std::sort(files.begin(), files.end());
    for (const auto& file : files) {
      std::ifstream in(file);
      if (!in) throw InputError("cannot open document: " + file.string());
      std::stringstream ss;
      ss << in.rdbuf();
      const std::string text = trimmed(ss.str());
      if (text.empty()) {
        throw InputError("empty document text: " + file.string());
      }
      data.docs.push_back({text, idx});
    }
  }
  if (data.docs.empty()) throw InputError("empty corpus");
  return data;
}

void write_corpus_tsv(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write corpus file: " + path.string());
  for (const auto& doc : data.docs) {
    std::string text = doc.text;
    // The format reserves tab and newline.
    for (char& c : text) {
      if (c == '\t' || c == '\n' || c == '\r') c = ' ';
    }
    out << data.class_names.at(static_cast<std::size_t>(doc.label)) << '\t' << text << '\n';
  }
  if (!out) throw InputError("write failed: " + path.string());
}

void save_vocabulary(const std::filesystem::path& path, const Vocabulary& vocab) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write vocabulary file: " + path.string());
  for (const auto& tok : vocab.tokens()) out << tok << '\n';
  if (!out) throw InputError("write failed: " + path.string());
}

Vocabulary load_vocabulary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open vocabulary file: " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) tokens.push_back(line);
  }
  return Vocabulary::from_tokens(std::move(tokens));
}

void save_embedding_cache(const std::filesystem::path& path, const EmbeddingMatrix& m) {
  json j;
  j["format"] = "bdlstm-embedding";
  j["rows"] = m.rows;
  j["cols"] = m.cols;
  std::vector<std::uint8_t> bytes(m.size() * sizeof(double));
  std::memcpy(bytes.data(), m.data(), bytes.size());
  j["data"] = json::binary(std::move(bytes));
  const auto cbor = json::to_cbor(j);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write embedding cache: " + path.string());
  out.write(reinterpret_cast<const char*>(cbor.data()),
            static_cast<std::streamsize>(cbor.size()));
  if (!out) throw InputError("write failed: " + path.string());
}

EmbeddingMatrix load_embedding_cache(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open embedding cache: " + path.string());
  std::vector<std::uint8_t> cbor((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
  json j;
  try {
    j = json::from_cbor(cbor);
  } catch (const json::exception& e) {
    throw InputError("corrupt embedding cache " + path.string() + ": " + e.what());
  }
  if (j.value("format", "") != "bdlstm-embedding") {
    throw InputError("not an embedding cache: " + path.string());
  }
  EmbeddingMatrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
  const auto& bytes = j.at("data").get_binary();
  if (bytes.size() != m.size() * sizeof(double)) {
    throw InputError("embedding cache size mismatch: " + path.string());
  }
  std::memcpy(m.data(), bytes.data(), bytes.size());
  return m;
}

}  // namespace bdlstm::corpus
