#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "bdlstm/errors.hpp"
#include "bdlstm/poison.hpp"
#include "bdlstm/trainer.hpp"
#include "support/synthetic.hpp"

using namespace bdlstm;
using namespace bdlstm::trainer;

namespace {

struct SmallSetup {
  corpus::Dataset train;
  corpus::Vocabulary vocab;
  corpus::EmbeddingMatrix embeddings;
  TrainConfig cfg;
};

SmallSetup small_setup(std::size_t docs = 200, std::uint64_t seed = 1) {
  testsupport::SynthSpec spec;
  spec.train_docs = docs;
  spec.test_docs = 10;
  spec.min_tokens = 8;
  spec.max_tokens = 16;
  spec.seed = 555;
  auto data = testsupport::make_synth(spec);

  SmallSetup s;
  s.train = std::move(data.train);
  s.vocab = corpus::build_vocabulary(s.train.docs, 1000);
  s.embeddings.assign(s.vocab.size(), 6);
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> dist(-0.5, 0.5);
  for (std::size_t r = corpus::kReservedTokens; r < s.embeddings.rows; ++r) {
    for (std::size_t c = 0; c < 6; ++c) s.embeddings.at(r, c) = dist(rng);
  }
  s.cfg.epochs = 2;
  s.cfg.batch_size = 16;
  s.cfg.learning_rate = 5e-3;
  s.cfg.hidden_size = 4;
  s.cfg.max_len = 24;
  s.cfg.embedding_dim = 6;
  s.cfg.seed = seed;
  return s;
}

bool params_equal(const nn::ModelParams& a, const nn::ModelParams& b) {
  const auto eq = [](const nn::LstmParams& x, const nn::LstmParams& y) {
    return x.w_f.v == y.w_f.v && x.w_i.v == y.w_i.v && x.w_o.v == y.w_o.v &&
           x.w_c.v == y.w_c.v && x.u_f.v == y.u_f.v && x.u_i.v == y.u_i.v &&
           x.u_o.v == y.u_o.v && x.u_c.v == y.u_c.v && x.b_f == y.b_f &&
           x.b_i == y.b_i && x.b_o == y.b_o && x.b_c == y.b_c;
  };
  return eq(a.forward_lstm, b.forward_lstm) && eq(a.backward_lstm, b.backward_lstm) &&
         a.dense_w.v == b.dense_w.v && a.dense_b == b.dense_b &&
         a.embedding.v == b.embedding.v;
}

}  // namespace

TEST_CASE("epoch_order is a permutation that changes between draws") {
  std::mt19937_64 rng(4);
  const auto o1 = epoch_order(100, rng);
  const auto o2 = epoch_order(100, rng);
  auto s1 = o1;
  std::sort(s1.begin(), s1.end());
  std::vector<std::size_t> expect(100);
  std::iota(expect.begin(), expect.end(), std::size_t{0});
  CHECK(s1 == expect);
  CHECK(o1 != o2);
}

TEST_CASE("init_params: Glorot weights, zero biases except forget gate") {
  corpus::EmbeddingMatrix emb(10, 4);
  std::mt19937_64 rng(8);
  auto p = init_params(emb, 5, 2, false, rng);
  CHECK(p.hidden() == 5);
  CHECK(p.classes() == 2);
  const double limit_w = std::sqrt(6.0 / (4 + 5));
  for (const double w : p.forward_lstm.w_f.v) CHECK(std::fabs(w) <= limit_w);
  CHECK(std::all_of(p.forward_lstm.b_f.begin(), p.forward_lstm.b_f.end(),
                    [](double x) { return x == 1.0; }));
  CHECK(std::all_of(p.forward_lstm.b_i.begin(), p.forward_lstm.b_i.end(),
                    [](double x) { return x == 0.0; }));
  CHECK(std::all_of(p.dense_b.begin(), p.dense_b.end(), [](double x) { return x == 0.0; }));
}

TEST_CASE("optimizer_step") {
  corpus::EmbeddingMatrix emb(6, 3);
  std::mt19937_64 rng(2);
  auto params = init_params(emb, 2, 2, false, rng);
  nn::Gradients grads;
  grads.shape_like(params);
  grads.zero();
  OptimizerState state;
  TrainConfig cfg;
  cfg.hidden_size = 2;
  cfg.embedding_dim = 3;

  SUBCASE("zero gradient leaves parameters unchanged and advances the step") {
    const auto before = params;
    optimizer_step(params, grads, state, cfg);
    CHECK(state.step == 1);
    CHECK(params_equal(params, before));
  }

  SUBCASE("sgd moves against the gradient by lr * g") {
    cfg.optimizer = Optimizer::sgd;
    cfg.learning_rate = 0.1;
    std::fill(grads.fwd.w_f.v.begin(), grads.fwd.w_f.v.end(), 2.0);
    const double before = params.forward_lstm.w_f.v[0];
    optimizer_step(params, grads, state, cfg);
    CHECK(params.forward_lstm.w_f.v[0] == doctest::Approx(before - 0.2).epsilon(1e-15));
  }

  SUBCASE("frozen embeddings are not part of the update") {
    std::fill(grads.dense_b.begin(), grads.dense_b.end(), 1.0);
    const auto emb_before = params.embedding.v;
    optimizer_step(params, grads, state, cfg);
    CHECK(params.embedding.v == emb_before);
  }
}

TEST_CASE("training is bitwise deterministic for equal (data, config, seed)") {
  auto s = small_setup();
  const auto m1 = train(s.train.docs, 2, s.vocab, s.embeddings, s.cfg);
  const auto m2 = train(s.train.docs, 2, s.vocab, s.embeddings, s.cfg);
  CHECK(params_equal(m1, m2));

  auto cfg3 = s.cfg;
  cfg3.seed = s.cfg.seed + 1;
  const auto m3 = train(s.train.docs, 2, s.vocab, s.embeddings, cfg3);
  CHECK_FALSE(params_equal(m1, m3));
}

TEST_CASE("zero-rate poisoning pipeline is a bitwise no-op") {
  auto s = small_setup();
  poison::PoisonConfig pcfg;
  pcfg.trigger = poison::TriggerSpec::from_sentence(testsupport::trigger_sentence(3));
  pcfg.source_class = 0;
  pcfg.target_class = 1;
  pcfg.rate = 0.0;
  std::mt19937_64 rng(77);
  const auto merged =
      poison::merge_training_set(s.train, poison::make_poison_set(s.train, pcfg, rng));
  REQUIRE(merged.poison_count == 0);
  const auto clean = train(s.train.docs, 2, s.vocab, s.embeddings, s.cfg);
  const auto victim = train(merged.documents, 2, s.vocab, s.embeddings, s.cfg);
  CHECK(params_equal(clean, victim));
}

TEST_CASE("training loss strictly decreases over the first three epochs") {
  auto s = small_setup(400);
  s.cfg.epochs = 3;
  std::vector<double> losses;
  (void)train(s.train.docs, 2, s.vocab, s.embeddings, s.cfg,
              [&](const EpochLog& log) { losses.push_back(log.mean_loss); });
  REQUIRE(losses.size() == 3);
  CHECK(losses[1] < losses[0]);
  CHECK(losses[2] < losses[1]);
}

TEST_CASE("frozen embedding rows are bit-identical after training") {
  auto s = small_setup();
  const auto before = s.embeddings.v;
  const auto model = train(s.train.docs, 2, s.vocab, s.embeddings, s.cfg);
  CHECK(model.embedding.v == before);
}

TEST_CASE("trainable embeddings change under training") {
  auto s = small_setup();
  s.cfg.freeze_embeddings = false;
  const auto before = s.embeddings.v;
  const auto model = train(s.train.docs, 2, s.vocab, s.embeddings, s.cfg);
  CHECK(model.embedding.v != before);
}

TEST_CASE("divergence is reported with epoch and batch") {
  auto s = small_setup(64);
  s.cfg.optimizer = Optimizer::sgd;
  s.cfg.learning_rate = 1e308;
  s.cfg.batch_size = 1;
  s.cfg.epochs = 4;
  try {
    (void)train(s.train.docs, 2, s.vocab, s.embeddings, s.cfg);
    FAIL("expected divergence");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("diverged at epoch") != std::string::npos);
  }
}

TEST_CASE("input validation") {
  auto s = small_setup(16);

  SUBCASE("empty training set") {
    CHECK_THROWS_AS(train({}, 2, s.vocab, s.embeddings, s.cfg), InputError);
  }
  SUBCASE("label out of range") {
    auto docs = s.train.docs;
    docs[0].label = 7;
    CHECK_THROWS_AS(train(docs, 2, s.vocab, s.embeddings, s.cfg), InputError);
  }
  SUBCASE("config validation") {
    auto bad = s.cfg;
    bad.epochs = 0;
    CHECK_THROWS_AS(train(s.train.docs, 2, s.vocab, s.embeddings, bad), InputError);
    bad = s.cfg;
    bad.learning_rate = 0.0;
    CHECK_THROWS_AS(train(s.train.docs, 2, s.vocab, s.embeddings, bad), InputError);
  }
  SUBCASE("optimizer names") {
    CHECK(parse_optimizer("adam") == Optimizer::adam);
    CHECK(parse_optimizer("sgd") == Optimizer::sgd);
    CHECK_THROWS_AS(parse_optimizer("adagrad"), InputError);
  }
}
