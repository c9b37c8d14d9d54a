#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>

#include "bdlstm/errors.hpp"
#include "bdlstm/poison.hpp"

using namespace bdlstm;
using namespace bdlstm::poison;

namespace {

corpus::Dataset two_class_corpus(std::size_t n) {
  corpus::Dataset data;
  data.class_names = {"neg", "pos"};
  data.docs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    data.docs.push_back({"alpha beta gamma delta doc" + std::to_string(i),
                         static_cast<int>(i % 2)});
  }
  return data;
}

std::multiset<std::string> token_multiset(const std::vector<std::string>& tokens) {
  return {tokens.begin(), tokens.end()};
}

PoisonConfig basic_config(double rate) {
  PoisonConfig cfg;
  cfg.trigger = TriggerSpec::from_sentence("one two three");
  cfg.source_class = 0;
  cfg.target_class = 1;
  cfg.rate = rate;
  return cfg;
}

}  // namespace

TEST_CASE("TriggerSpec caches tokens and length") {
  const auto t = TriggerSpec::from_sentence("I watched this 3D movie");
  CHECK(t.length() == 5);
  CHECK(t.tokens == std::vector<std::string>{"i", "watched", "this", "3d", "movie"});
  CHECK(t.words == std::vector<std::string>{"I", "watched", "this", "3D", "movie"});
  CHECK_THROWS_AS(TriggerSpec::from_sentence("..."), InputError);
}

TEST_CASE("insert_trigger") {
  const std::vector<std::string> tokens{"a", "b"};
  const std::vector<std::string> trig{"T1", "T2"};

  CHECK(insert_trigger(tokens, trig, 0) == std::vector<std::string>{"T1", "T2", "a", "b"});
  CHECK(insert_trigger(tokens, trig, 1) == std::vector<std::string>{"a", "T1", "T2", "b"});
  CHECK(insert_trigger({}, std::vector<std::string>{"T"}, 0) == std::vector<std::string>{"T"});
  CHECK(insert_trigger(std::vector<std::string>{"a", "b", "c"},
                       std::vector<std::string>{"T"}, 3) ==
        std::vector<std::string>{"a", "b", "c", "T"});
  CHECK_THROWS_AS(insert_trigger(tokens, trig, 3), std::out_of_range);
}

TEST_CASE("insertion preserves original tokens and order") {
  std::mt19937_64 rng(99);
  const std::vector<std::string> tokens{"w1", "w2", "w3", "w4", "w5"};
  const std::vector<std::string> trig{"T1", "T2"};
  for (int iter = 0; iter < 100; ++iter) {
    const std::size_t pos = sample_insertion_position(tokens.size(), rng);
    const auto result = insert_trigger(tokens, trig, pos);
    REQUIRE(result.size() == tokens.size() + trig.size());
    // Removing the trigger slice restores the original exactly.
    std::vector<std::string> stripped(result.begin(),
                                      result.begin() + static_cast<std::ptrdiff_t>(pos));
    stripped.insert(stripped.end(),
                    result.begin() + static_cast<std::ptrdiff_t>(pos + trig.size()),
                    result.end());
    CHECK(stripped == tokens);
    CHECK(contains_contiguous(result, trig));
  }
}

TEST_CASE("sample_insertion_position") {
  std::mt19937_64 rng(123);

  SUBCASE("doc_length 0 has a single gap") {
    CHECK(sample_insertion_position(0, rng) == 0);
  }

  SUBCASE("random-word-gap is uniform (chi-squared, p > 0.01)") {
    constexpr std::size_t kDraws = 100000;
    constexpr std::size_t kGaps = 4;  // doc_length 3
    std::array<std::size_t, kGaps> counts{};
    for (std::size_t d = 0; d < kDraws; ++d) {
      const std::size_t pos = sample_insertion_position(3, rng);
      REQUIRE(pos < kGaps);
      ++counts[pos];
    }
    const double expected = static_cast<double>(kDraws) / kGaps;
    double stat = 0.0;
    for (const auto c : counts) {
      const double diff = static_cast<double>(c) - expected;
      stat += diff * diff / expected;
    }
    // 99th percentile of chi-squared with 3 degrees of freedom.
    CHECK(stat < 11.3449);
  }

  SUBCASE("sentence boundaries") {
    const auto words = corpus::split_words("a b. c d");
    CHECK(sentence_boundary_gaps(words) == std::vector<std::size_t>{0, 2});
    for (int iter = 0; iter < 50; ++iter) {
      const auto pos = sample_insertion_position(words, InsertionPolicy::sentence_boundary, rng);
      CHECK((pos == 0 || pos == 2));
    }
    // Exclamation/question marks and closing quotes count.
    CHECK(sentence_boundary_gaps(corpus::split_words("ok! sure? \"done.\" next")) ==
          std::vector<std::size_t>{0, 1, 2, 3});
  }

  SUBCASE("fallback when no boundary punctuation exists") {
    const auto words = corpus::split_words("a b c");
    CHECK(sentence_boundary_gaps(words) == std::vector<std::size_t>{0, 3});
  }
}

TEST_CASE("poison_count_for rounds half up") {
  CHECK(poison_count_for(0.01, 10000) == 100);
  CHECK(poison_count_for(0.0, 10000) == 0);
  CHECK(poison_count_for(0.005, 100) == 1);   // 0.5 rounds up
  CHECK(poison_count_for(0.004, 100) == 0);   // 0.4 rounds down
  CHECK(poison_count_for(1.0, 7) == 7);
}

TEST_CASE("make_poison_set") {
  SUBCASE("n=10000 at one percent yields 100 samples, all target-labeled") {
    const auto train = two_class_corpus(10000);
    auto cfg = basic_config(0.01);
    std::mt19937_64 rng(7);
    const auto poison_set = make_poison_set(train, cfg, rng);
    REQUIRE(poison_set.size() == 100);
    for (const auto& doc : poison_set) {
      CHECK(doc.label == cfg.target_class);
      CHECK(contains_contiguous(corpus::split_words(doc.text), cfg.trigger.words));
    }
  }

  SUBCASE("rate zero merges to exactly the original set") {
    const auto train = two_class_corpus(50);
    auto cfg = basic_config(0.0);
    std::mt19937_64 rng(7);
    const auto poison_set = make_poison_set(train, cfg, rng);
    CHECK(poison_set.empty());
    const auto merged = merge_training_set(train, poison_set);
    CHECK(merged.poison_count == 0);
    CHECK(merged.original_count == 50);
    REQUIRE(merged.documents.size() == 50);
    for (std::size_t i = 0; i < merged.documents.size(); ++i) {
      CHECK(merged.documents[i].text == train.docs[i].text);
      CHECK(merged.documents[i].label == train.docs[i].label);
    }
  }

  SUBCASE("token multiset is original plus trigger, contiguous") {
    const auto train = two_class_corpus(40);
    auto cfg = basic_config(0.25);
    std::mt19937_64 rng(11);
    const auto poison_set = make_poison_set(train, cfg, rng);
    REQUIRE(poison_set.size() == 10);
    // Each poisoned text corresponds to some source-class original.
    std::vector<std::multiset<std::string>> originals;
    for (const auto& doc : train.docs) {
      if (doc.label == 0) originals.push_back(token_multiset(corpus::tokenize(doc.text)));
    }
    const auto trigger_tokens = token_multiset(cfg.trigger.tokens);
    for (const auto& doc : poison_set) {
      auto tokens = token_multiset(corpus::tokenize(doc.text));
      for (const auto& t : trigger_tokens) {
        const auto it = tokens.find(t);
        REQUIRE(it != tokens.end());
        tokens.erase(it);
      }
      CHECK(std::count(originals.begin(), originals.end(), tokens) > 0);
      CHECK(contains_contiguous(corpus::tokenize(doc.text), cfg.trigger.tokens));
    }
  }

  SUBCASE("originals are untouched") {
    const auto train = two_class_corpus(40);
    const auto before = train.docs;
    auto cfg = basic_config(0.5);
    std::mt19937_64 rng(3);
    (void)make_poison_set(train, cfg, rng);
    for (std::size_t i = 0; i < before.size(); ++i) {
      CHECK(train.docs[i].text == before[i].text);
      CHECK(train.docs[i].label == before[i].label);
    }
  }

  SUBCASE("insufficient source-class samples name required vs available") {
    const auto train = two_class_corpus(10);  // 5 per class
    auto cfg = basic_config(0.9);             // needs 9
    std::mt19937_64 rng(1);
    try {
      (void)make_poison_set(train, cfg, rng);
      FAIL("expected InputError");
    } catch (const InputError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("required 9") != std::string::npos);
      CHECK(msg.find("available 5") != std::string::npos);
    }
  }

  SUBCASE("equal seeds give identical sets") {
    const auto train = two_class_corpus(60);
    auto cfg = basic_config(0.2);
    std::mt19937_64 rng1(42), rng2(42);
    const auto s1 = make_poison_set(train, cfg, rng1);
    const auto s2 = make_poison_set(train, cfg, rng2);
    REQUIRE(s1.size() == s2.size());
    for (std::size_t i = 0; i < s1.size(); ++i) CHECK(s1[i].text == s2[i].text);
  }

  SUBCASE("config validation") {
    auto cfg = basic_config(0.1);
    cfg.target_class = cfg.source_class;
    CHECK_THROWS_AS(validate(cfg), InputError);
    cfg = basic_config(1.5);
    CHECK_THROWS_AS(validate(cfg), InputError);
  }
}

TEST_CASE("make_backdoor_set") {
  corpus::Dataset test;
  test.class_names = {"neg", "pos"};
  for (std::size_t i = 0; i < 800; ++i) {
    test.docs.push_back({"review token" + std::to_string(i) + " stuff. more text",
                         static_cast<int>(i % 2)});
  }

  auto cfg = basic_config(0.0);

  SUBCASE("count instances, trigger present, ground truth retained") {
    std::mt19937_64 rng(5);
    const auto set = make_backdoor_set(test, cfg, 300, rng);
    REQUIRE(set.instances.size() == 300);
    std::set<std::string> distinct;
    for (const auto& inst : set.instances) {
      CHECK(inst.label == cfg.source_class);
      CHECK(contains_contiguous(corpus::split_words(inst.text), cfg.trigger.words));
      distinct.insert(inst.text);
    }
    CHECK(distinct.size() == 300);  // drawn without replacement from distinct docs
  }

  SUBCASE("count zero gives empty set") {
    std::mt19937_64 rng(5);
    CHECK(make_backdoor_set(test, cfg, 0, rng).instances.empty());
  }

  SUBCASE("equal seeds select identical instances and positions") {
    std::mt19937_64 rng1(9), rng2(9);
    const auto s1 = make_backdoor_set(test, cfg, 50, rng1);
    const auto s2 = make_backdoor_set(test, cfg, 50, rng2);
    REQUIRE(s1.instances.size() == s2.instances.size());
    for (std::size_t i = 0; i < s1.instances.size(); ++i) {
      CHECK(s1.instances[i].text == s2.instances[i].text);
    }
  }

  SUBCASE("sentence-boundary policy places the trigger only at boundaries") {
    std::mt19937_64 rng(17);
    cfg.backdoor_insertion = InsertionPolicy::sentence_boundary;
    const auto set = make_backdoor_set(test, cfg, 100, rng);
    for (const auto& inst : set.instances) {
      const auto words = corpus::split_words(inst.text);
      // The trigger starts either at 0 or right after "stuff." (gap 3).
      const bool at_start = std::equal(cfg.trigger.words.begin(), cfg.trigger.words.end(),
                                       words.begin());
      const bool after_stop =
          words.size() >= 3 + cfg.trigger.words.size() &&
          std::equal(cfg.trigger.words.begin(), cfg.trigger.words.end(), words.begin() + 3);
      CHECK((at_start || after_stop));
    }
  }

  SUBCASE("insufficient test samples error") {
    std::mt19937_64 rng(5);
    CHECK_THROWS_AS(make_backdoor_set(test, cfg, 500, rng), InputError);
  }
}
