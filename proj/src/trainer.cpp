#include "bdlstm/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "bdlstm/errors.hpp"
#include "bdlstm/kernels.hpp"

namespace bdlstm::trainer {

namespace {

// Trainable tensors in a fixed order; the optimizer state slots follow it.
template <typename Params, typename Fn>
void visit_lstm(Params& p, Fn&& fn) {
  fn(p.w_f.v);
  fn(p.w_i.v);
  fn(p.w_o.v);
  fn(p.w_c.v);
  fn(p.u_f.v);
  fn(p.u_i.v);
  fn(p.u_o.v);
  fn(p.u_c.v);
  fn(p.b_f);
  fn(p.b_i);
  fn(p.b_o);
  fn(p.b_c);
}

std::vector<Vec*> trainable_tensors(nn::ModelParams& p) {
  std::vector<Vec*> out;
  visit_lstm(p.forward_lstm, [&](Vec& v) { out.push_back(&v); });
  visit_lstm(p.backward_lstm, [&](Vec& v) { out.push_back(&v); });
  out.push_back(&p.dense_w.v);
  out.push_back(&p.dense_b);
  if (p.trainable_embedding) out.push_back(&p.embedding.v);
  return out;
}

std::vector<const Vec*> gradient_tensors(const nn::Gradients& g) {
  std::vector<const Vec*> out;
  visit_lstm(g.fwd, [&](const Vec& v) { out.push_back(&v); });
  visit_lstm(g.bwd, [&](const Vec& v) { out.push_back(&v); });
  out.push_back(&g.dense_w.v);
  out.push_back(&g.dense_b);
  if (g.embedding_enabled) out.push_back(&g.embedding.v);
  return out;
}

std::vector<Vec*> gradient_tensors(nn::Gradients& g) {
  std::vector<Vec*> out;
  visit_lstm(g.fwd, [&](Vec& v) { out.push_back(&v); });
  visit_lstm(g.bwd, [&](Vec& v) { out.push_back(&v); });
  out.push_back(&g.dense_w.v);
  out.push_back(&g.dense_b);
  if (g.embedding_enabled) out.push_back(&g.embedding.v);
  return out;
}

void glorot_fill(Vec& v, std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (double& x : v) x = dist(rng);
}

void init_lstm(nn::LstmParams& p, std::mt19937_64& rng) {
  const std::size_t h = p.hidden_dim;
  const std::size_t n = p.input_dim;
  for (Mat* m : {&p.w_f, &p.w_i, &p.w_o, &p.w_c}) glorot_fill(m->v, n, h, rng);
  for (Mat* m : {&p.u_f, &p.u_i, &p.u_o, &p.u_c}) glorot_fill(m->v, h, h, rng);
  std::fill(p.b_f.begin(), p.b_f.end(), 1.0);  // forget gate open at start
}

bool all_finite(const Vec& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

const char* optimizer_name(Optimizer o) {
  return o == Optimizer::adam ? "adam" : "sgd";
}

Optimizer parse_optimizer(std::string_view name) {
  if (name == "adam") return Optimizer::adam;
  if (name == "sgd") return Optimizer::sgd;
  throw InputError("unknown optimizer: '" + std::string(name) + "'");
}

void validate(const TrainConfig& cfg) {
  if (cfg.epochs < 1) throw InputError("epochs must be >= 1");
  if (cfg.batch_size < 1) throw InputError("batch_size must be >= 1");
  if (!(cfg.learning_rate > 0.0)) throw InputError("learning_rate must be positive");
  if (cfg.hidden_size < 1) throw InputError("hidden_size must be >= 1");
  if (cfg.max_len < 1) throw InputError("max_len must be >= 1");
  if (cfg.embedding_dim < 1) throw InputError("embedding_dim must be >= 1");
}

std::vector<std::size_t> epoch_order(std::size_t n, std::mt19937_64& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

nn::ModelParams init_params(const corpus::EmbeddingMatrix& embedding, std::size_t hidden,
                            std::size_t n_classes, bool trainable_embedding,
                            std::mt19937_64& rng) {
  if (n_classes < 2) throw std::invalid_argument("need at least two classes");
  nn::ModelParams p;
  p.embedding = embedding;
  p.trainable_embedding = trainable_embedding;
  p.forward_lstm.assign(embedding.cols, hidden);
  p.backward_lstm.assign(embedding.cols, hidden);
  init_lstm(p.forward_lstm, rng);
  init_lstm(p.backward_lstm, rng);
  p.dense_w.assign(n_classes, 2 * hidden);
  glorot_fill(p.dense_w.v, 2 * hidden, n_classes, rng);
  p.dense_b.assign(n_classes, 0.0);
  nn::validate_shapes(p);
  return p;
}

void optimizer_step(nn::ModelParams& params, const nn::Gradients& grads,
                    OptimizerState& state, const TrainConfig& cfg) {
  const auto tensors = trainable_tensors(params);
  const auto gtensors = gradient_tensors(grads);
  if (tensors.size() != gtensors.size()) {
    throw std::invalid_argument("optimizer_step: tensor count mismatch");
  }
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    if (tensors[i]->size() != gtensors[i]->size()) {
      throw std::invalid_argument("optimizer_step: tensor shape mismatch");
    }
  }
  ++state.step;
  if (cfg.optimizer == Optimizer::sgd) {
    for (std::size_t i = 0; i < tensors.size(); ++i) {
      kernels::sgd_step(tensors[i]->size(), tensors[i]->data(), gtensors[i]->data(),
                        cfg.learning_rate);
    }
    return;
  }
  if (state.m.empty()) {
    state.m.resize(tensors.size());
    state.v.resize(tensors.size());
    for (std::size_t i = 0; i < tensors.size(); ++i) {
      state.m[i].assign(tensors[i]->size(), 0.0);
      state.v[i].assign(tensors[i]->size(), 0.0);
    }
  } else if (state.m.size() != tensors.size()) {
    throw std::invalid_argument("optimizer_step: state does not match parameters");
  }
  const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    kernels::adam_step(tensors[i]->size(), tensors[i]->data(), state.m[i].data(),
                       state.v[i].data(), gtensors[i]->data(), cfg.learning_rate,
                       cfg.adam_beta1, cfg.adam_beta2, cfg.adam_epsilon, bc1, bc2);
  }
}

nn::ModelParams train(std::span<const corpus::RawDocument> docs, std::size_t n_classes,
                      const corpus::Vocabulary& vocab,
                      const corpus::EmbeddingMatrix& embeddings, const TrainConfig& cfg,
                      const EpochCallback& on_epoch) {
  const auto encoded = corpus::encode_all(docs, vocab, cfg.max_len);
  return train_encoded(encoded, n_classes, embeddings, cfg, on_epoch);
}

nn::ModelParams train_encoded(std::span<const corpus::EncodedDocument> docs,
                              std::size_t n_classes,
                              const corpus::EmbeddingMatrix& embeddings,
                              const TrainConfig& cfg, const EpochCallback& on_epoch) {
  validate(cfg);
  if (docs.empty()) throw InputError("empty training set");
  if (embeddings.cols != cfg.embedding_dim) {
    throw InputError("embedding matrix width does not match configured dimension");
  }
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (docs[i].label < 0 || static_cast<std::size_t>(docs[i].label) >= n_classes) {
      throw InputError("training label out of range at document " + std::to_string(i));
    }
    if (docs[i].true_length == 0) {
      throw InputError("document with no tokens at index " + std::to_string(i));
    }
  }

  std::mt19937_64 rng(cfg.seed);
  nn::ModelParams params =
      init_params(embeddings, cfg.hidden_size, n_classes, !cfg.freeze_embeddings, rng);
  nn::Gradients grads;
  grads.shape_like(params);
  OptimizerState state;
  nn::ForwardTrace trace;

  const auto check_params_finite = [&](std::size_t epoch, std::size_t batch) {
    for (const Vec* t : trainable_tensors(params)) {
      if (!all_finite(*t)) {
        throw std::runtime_error("diverged at epoch " + std::to_string(epoch + 1) +
                                 " batch " + std::to_string(batch + 1) +
                                 ": non-finite parameter");
      }
    }
  };

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    const auto order = epoch_order(docs.size(), rng);
    double epoch_loss = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      const std::size_t end = std::min(begin + cfg.batch_size, order.size());
      grads.zero();
      for (std::size_t k = begin; k < end; ++k) {
        const auto& doc = docs[order[k]];
        nn::bilstm_forward(doc, params, trace);
        const double sample_loss = nn::loss(trace.probs, doc.label);
        if (!std::isfinite(sample_loss)) {
          throw std::runtime_error("diverged at epoch " + std::to_string(epoch + 1) +
                                   " batch " + std::to_string(batch_index + 1) +
                                   ": non-finite loss");
        }
        epoch_loss += sample_loss;
        nn::backward(trace, doc.label, params, grads);
      }
      // The last batch may be short; average over its actual size.
      const double inv = 1.0 / static_cast<double>(end - begin);
      for (Vec* g : gradient_tensors(grads)) {
        kernels::scale(g->size(), inv, g->data());
      }
      optimizer_step(params, grads, state, cfg);
      check_params_finite(epoch, batch_index);
      ++batch_index;
    }
    if (on_epoch) {
      const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
      on_epoch({epoch + 1, epoch_loss / static_cast<double>(docs.size()), elapsed.count()});
    }
  }
  return params;
}

}  // namespace bdlstm::trainer
