#pragma once

#include <cstdint>
#include <span>

#include "bdlstm/corpus.hpp"
#include "bdlstm/mat.hpp"

namespace bdlstm::nn {

// Per-gate LSTM weights: w_* are hidden x input, u_* hidden x hidden,
// b_* hidden. The same struct doubles as the gradient record.
struct LstmParams {
  std::size_t input_dim = 0, hidden_dim = 0;
  Mat w_f, w_i, w_o, w_c;
  Mat u_f, u_i, u_o, u_c;
  Vec b_f, b_i, b_o, b_c;

  void assign(std::size_t input, std::size_t hidden);
};

struct LstmState {
  Vec h, c;
};

struct GateRecord {
  Vec f, i, o, candidate;  // candidate = tanh pre-gate cell input
};

struct ModelParams {
  corpus::EmbeddingMatrix embedding;  // vocab x input_dim; PAD row all-zero
  LstmParams forward_lstm, backward_lstm;
  Mat dense_w;  // classes x 2*hidden
  Vec dense_b;  // classes
  bool trainable_embedding = false;

  std::size_t hidden() const { return forward_lstm.hidden_dim; }
  std::size_t input_dim() const { return forward_lstm.input_dim; }
  std::size_t classes() const { return dense_b.size(); }
};

void validate_shapes(const ModelParams& p);

// Logistic function with the pre-activation clamped to [-40, 40].
double sigmoid(double x);

// One LSTM step: gates from affine maps of (x_t, h_prev), then
// c = f.c_prev + i.candidate and h = o.tanh(c).
void lstm_cell_forward(std::span<const double> x, const LstmState& prev,
                       const LstmParams& p, LstmState& next, GateRecord& gates);

// Activation history of one scan direction; row t is scan step t.
struct DirectionTrace {
  Mat f, i, o, g, c, h, tanh_c;
  std::vector<std::int32_t> token;  // vocabulary index consumed at step t

  void assign(std::size_t steps, std::size_t hidden);
};

struct ForwardTrace {
  DirectionTrace fwd, bwd;
  Vec concat;  // [h_fwd_final ; h_bwd_final]
  Vec logits, probs;
  std::size_t true_len = 0;
};

// Scans the first true_length tokens (never PAD) in both directions from zero
// initial state, concatenates the two final hidden states and applies the
// dense softmax head.
void bilstm_forward(const corpus::EncodedDocument& doc, const ModelParams& p,
                    ForwardTrace& trace);

// Cross-entropy: -log(probs[label]) with probs clamped to >= 1e-12.
double loss(const Vec& probs, int label);

// Ties break toward the lowest class index.
int argmax_class(std::span<const double> probs);

struct Gradients {
  LstmParams fwd, bwd;
  Mat dense_w;
  Vec dense_b;
  Mat embedding;  // allocated only when embeddings are trainable
  bool embedding_enabled = false;

  void shape_like(const ModelParams& p);
  void zero();
};

// Exact reverse accumulation through the gate equations; accumulates into acc.
void backward(const ForwardTrace& trace, int label, const ModelParams& p, Gradients& acc);
Gradients backward(const ForwardTrace& trace, int label, const ModelParams& p);

}  // namespace bdlstm::nn
