#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <random>

#include "bdlstm/corpus.hpp"
#include "bdlstm/errors.hpp"
#include "support/tempdir.hpp"

using namespace bdlstm;
using namespace bdlstm::corpus;
using testsupport::TempDir;

namespace {

void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  out << content;
}

}  // namespace

TEST_CASE("tokenize") {
  CHECK(tokenize("I watched this 3D movie") ==
        std::vector<std::string>{"i", "watched", "this", "3d", "movie"});
  CHECK(tokenize("Don't Go, If you must...") ==
        std::vector<std::string>{"don't", "go", "if", "you", "must"});
  CHECK(tokenize("") == std::vector<std::string>{});
  CHECK(tokenize("   \t\n ") == std::vector<std::string>{});
  // Internal hyphens/apostrophes survive, edge punctuation does not.
  CHECK(tokenize("well-known 'quoted' (parens)") ==
        std::vector<std::string>{"well-known", "quoted", "parens"});
  CHECK(tokenize("...") == std::vector<std::string>{});
  // Unicode whitespace splits; multi-byte text passes through intact.
  CHECK(tokenize("a\xc2\xa0season") == std::vector<std::string>{"a", "season"});
}

TEST_CASE("split_words keeps punctuation and case") {
  CHECK(split_words("Don't Go, now.") ==
        std::vector<std::string>{"Don't", "Go,", "now."});
  CHECK(join_words(split_words("a  b   c")) == "a b c");
}

TEST_CASE("build_vocabulary") {
  const std::vector<RawDocument> docs{{"a b a", 0}, {"b c", 1}};

  SUBCASE("most frequent tokens with lexicographic ties") {
    const auto vocab = build_vocabulary(docs, 4);
    CHECK(vocab.size() == 4);
    CHECK(vocab.lookup("a") == 2);
    CHECK(vocab.lookup("b") == 3);
    CHECK(vocab.lookup("c") == kOovIndex);
    CHECK(vocab.lookup("zzz") == kOovIndex);
  }

  SUBCASE("single token corpus") {
    const std::vector<RawDocument> one{{"x", 0}};
    const auto vocab = build_vocabulary(one, 3);
    CHECK(vocab.size() == 3);
    CHECK(vocab.lookup("x") == 2);
  }

  SUBCASE("deterministic") {
    const auto v1 = build_vocabulary(docs, 10);
    const auto v2 = build_vocabulary(docs, 10);
    REQUIRE(v1.size() == v2.size());
    for (std::int32_t i = 0; i < static_cast<std::int32_t>(v1.size()); ++i) {
      CHECK(v1.token_at(i) == v2.token_at(i));
    }
  }

  SUBCASE("empty corpus is an error") {
    CHECK_THROWS_WITH_AS(build_vocabulary({}, 10), "empty corpus", InputError);
  }

  SUBCASE("round trip between token and index") {
    const auto vocab = build_vocabulary(docs, 10);
    for (const auto& tok : vocab.tokens()) {
      const auto idx = vocab.lookup(tok);
      CHECK(idx >= static_cast<std::int32_t>(kReservedTokens));
      CHECK(vocab.token_at(idx) == tok);
    }
  }
}

TEST_CASE("load_embeddings") {
  TempDir tmp;
  const auto vocab = build_vocabulary({{{"good bad good neutral", 0}}}, 10);

  SUBCASE("rows copied verbatim, absent tokens zero, PAD zero") {
    write_file(tmp.file("vec.txt"), "good 0.1 0.2\nunrelated 9.0 9.0\n");
    const auto m = load_embeddings(tmp.file("vec.txt"), vocab, 2);
    REQUIRE(m.rows == vocab.size());
    REQUIRE(m.cols == 2);
    const auto good = static_cast<std::size_t>(vocab.lookup("good"));
    CHECK(m.at(good, 0) == 0.1);
    CHECK(m.at(good, 1) == 0.2);
    const auto bad = static_cast<std::size_t>(vocab.lookup("bad"));
    CHECK(m.at(bad, 0) == 0.0);
    CHECK(m.at(bad, 1) == 0.0);
    CHECK(m.at(kPadIndex, 0) == 0.0);
    CHECK(m.at(kOovIndex, 0) == 0.0);
  }

  SUBCASE("wrong float count names the line") {
    write_file(tmp.file("vec.txt"), "good 0.1 0.2\nbad 0.1\n");
    try {
      load_embeddings(tmp.file("vec.txt"), vocab, 2);
      FAIL("expected InputError");
    } catch (const InputError& e) {
      CHECK(std::string(e.what()).find(":2") != std::string::npos);
    }
  }

  SUBCASE("non-numeric value is an error") {
    write_file(tmp.file("vec.txt"), "good 0.1 zz\n");
    CHECK_THROWS_AS(load_embeddings(tmp.file("vec.txt"), vocab, 2), InputError);
  }

  SUBCASE("missing file is an error") {
    CHECK_THROWS_AS(load_embeddings(tmp.file("nope.txt"), vocab, 2), InputError);
  }
}

TEST_CASE("encode") {
  const auto vocab = Vocabulary::from_tokens({"a", "b", "c", "d", "e", "f"});

  SUBCASE("pads at the tail") {
    const auto doc = encode({"a b", 1}, vocab, 4);
    CHECK(doc.indices == std::vector<std::int32_t>{2, 3, 0, 0});
    CHECK(doc.true_length == 2);
    CHECK(doc.label == 1);
  }

  SUBCASE("truncates at the tail") {
    const auto doc = encode({"a b c d e f", 0}, vocab, 4);
    CHECK(doc.indices == std::vector<std::int32_t>{2, 3, 4, 5});
    CHECK(doc.true_length == 4);
  }

  SUBCASE("unknown token maps to OOV") {
    const auto doc = encode({"a zzz b", 0}, vocab, 4);
    CHECK(doc.indices == std::vector<std::int32_t>{2, kOovIndex, 3, 0});
  }

  SUBCASE("non-PAD count equals min(token count, M)") {
    std::mt19937_64 rng(7);
    const std::vector<std::string> pool{"a", "b", "c", "zzz", "qq"};
    for (int iter = 0; iter < 50; ++iter) {
      std::uniform_int_distribution<std::size_t> len_dist(0, 12);
      std::uniform_int_distribution<std::size_t> tok_dist(0, pool.size() - 1);
      std::vector<std::string> words;
      const std::size_t len = len_dist(rng);
      for (std::size_t i = 0; i < len; ++i) words.push_back(pool[tok_dist(rng)]);
      const RawDocument doc{join_words(words), 0};
      const auto enc = encode(doc, vocab, 8);
      std::size_t non_pad = 0;
      for (std::size_t i = 0; i < enc.indices.size(); ++i) {
        if (i < enc.true_length) {
          CHECK(enc.indices[i] != kPadIndex);
          ++non_pad;
        } else {
          CHECK(enc.indices[i] == kPadIndex);
        }
      }
      CHECK(non_pad == std::min<std::size_t>(len, 8));
    }
  }

  SUBCASE("deterministic for equal text") {
    const RawDocument doc{"a b zzz c", 0};
    const auto e1 = encode(doc, vocab, 6);
    const auto e2 = encode(doc, vocab, 6);
    CHECK(e1.indices == e2.indices);
    CHECK(e1.true_length == e2.true_length);
  }
}

TEST_CASE("TSV corpus round trip and label mapping") {
  TempDir tmp;

  SUBCASE("first-seen label order") {
    write_file(tmp.file("c.tsv"), "neg\tthis is bad\npos\tthis is good\nneg\tmeh\n");
    const auto data = load_corpus_tsv(tmp.file("c.tsv"));
    REQUIRE(data.class_names == std::vector<std::string>{"neg", "pos"});
    CHECK(data.docs.size() == 3);
    CHECK(data.docs[0].label == 0);
    CHECK(data.docs[1].label == 1);
  }

  SUBCASE("explicit class list pins indices and rejects unknown labels") {
    write_file(tmp.file("c.tsv"), "neg\tbad\npos\tgood\n");
    const std::vector<std::string> classes{"pos", "neg"};
    const auto data = load_corpus_tsv(tmp.file("c.tsv"), &classes);
    CHECK(data.docs[0].label == 1);
    CHECK(data.docs[1].label == 0);

    write_file(tmp.file("d.tsv"), "other\ttext\n");
    CHECK_THROWS_AS(load_corpus_tsv(tmp.file("d.tsv"), &classes), InputError);
  }

  SUBCASE("empty file is an empty corpus") {
    write_file(tmp.file("e.tsv"), "");
    CHECK_THROWS_WITH_AS(load_corpus_tsv(tmp.file("e.tsv")), "empty corpus", InputError);
  }

  SUBCASE("write then read returns the same documents") {
    Dataset data;
    data.class_names = {"neg", "pos"};
    data.docs = {{"alpha beta", 0}, {"gamma delta epsilon", 1}};
    write_corpus_tsv(tmp.file("w.tsv"), data);
    const auto back = load_corpus_tsv(tmp.file("w.tsv"));
    REQUIRE(back.docs.size() == 2);
    CHECK(back.docs[0].text == "alpha beta");
    CHECK(back.docs[1].label == 1);
  }
}

TEST_CASE("directory corpus ingestion") {
  TempDir tmp;
  namespace fs = std::filesystem;
  fs::create_directories(tmp.file("root/neg"));
  fs::create_directories(tmp.file("root/pos"));
  write_file(tmp.file("root/neg/a.txt"), "terrible stuff\n");
  write_file(tmp.file("root/pos/b.txt"), "lovely stuff\n");
  write_file(tmp.file("root/pos/c.txt"), "more lovely stuff\n");
  const auto data = load_corpus_dir(tmp.file("root"));
  REQUIRE(data.class_names == std::vector<std::string>{"neg", "pos"});
  CHECK(data.docs.size() == 3);
  CHECK(data.docs[0].label == 0);
  CHECK(data.docs[1].label == 1);
}

TEST_CASE("vocabulary and embedding caches round trip") {
  TempDir tmp;
  const auto vocab = Vocabulary::from_tokens({"alpha", "beta", "gamma"});
  save_vocabulary(tmp.file("vocab.txt"), vocab);
  const auto back = load_vocabulary(tmp.file("vocab.txt"));
  REQUIRE(back.size() == vocab.size());
  CHECK(back.lookup("beta") == vocab.lookup("beta"));

  EmbeddingMatrix m(5, 3);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> dist(-1, 1);
  for (double& x : m.v) x = dist(rng);
  save_embedding_cache(tmp.file("emb.bin"), m);
  const auto m2 = load_embedding_cache(tmp.file("emb.bin"));
  CHECK(m2.rows == m.rows);
  CHECK(m2.cols == m.cols);
  CHECK(m2.v == m.v);

  // Re-saving produces byte-identical files.
  save_embedding_cache(tmp.file("emb2.bin"), m2);
  std::ifstream f1(tmp.file("emb.bin"), std::ios::binary);
  std::ifstream f2(tmp.file("emb2.bin"), std::ios::binary);
  const std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  const std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(b1 == b2);
}
