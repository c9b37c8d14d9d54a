#include "bdlstm/nn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bdlstm/kernels.hpp"

namespace bdlstm::nn {

namespace {

using kernels::axpy;
using kernels::matvec_acc;
using kernels::matvec_t_acc;
using kernels::outer_acc;

// preact starts as the bias and receives W x + U h_prev.
void gate_preact(const Mat& w, const Mat& u, const Vec& b, const double* x,
                 const double* h_prev, double* preact) {
  std::copy(b.begin(), b.end(), preact);
  matvec_acc(w.data(), w.rows, w.cols, x, preact);
  matvec_acc(u.data(), u.rows, u.cols, h_prev, preact);
}

// One step writing directly into trace row t.
void step_into(const LstmParams& p, const double* x, const double* h_prev,
               const double* c_prev, DirectionTrace& tr, std::size_t t) {
  const std::size_t h = p.hidden_dim;
  double* f = tr.f.row(t);
  double* i = tr.i.row(t);
  double* o = tr.o.row(t);
  double* g = tr.g.row(t);
  double* c = tr.c.row(t);
  double* tc = tr.tanh_c.row(t);
  double* hv = tr.h.row(t);
  gate_preact(p.w_f, p.u_f, p.b_f, x, h_prev, f);
  gate_preact(p.w_i, p.u_i, p.b_i, x, h_prev, i);
  gate_preact(p.w_o, p.u_o, p.b_o, x, h_prev, o);
  gate_preact(p.w_c, p.u_c, p.b_c, x, h_prev, g);
  for (std::size_t k = 0; k < h; ++k) {
    f[k] = sigmoid(f[k]);
    i[k] = sigmoid(i[k]);
    o[k] = sigmoid(o[k]);
    g[k] = std::tanh(g[k]);
    c[k] = f[k] * c_prev[k] + i[k] * g[k];
    tc[k] = std::tanh(c[k]);
    hv[k] = o[k] * tc[k];
  }
}

void scan_direction(const ModelParams& p, const LstmParams& lstm,
                    std::span<const std::int32_t> tokens, bool reversed,
                    DirectionTrace& tr) {
  const std::size_t steps = tokens.size();
  const std::size_t h = lstm.hidden_dim;
  tr.assign(steps, h);
  const Vec zeros(h, 0.0);
  for (std::size_t t = 0; t < steps; ++t) {
    const std::int32_t tok = reversed ? tokens[steps - 1 - t] : tokens[t];
    tr.token[t] = tok;
    const double* x = p.embedding.row(static_cast<std::size_t>(tok));
    const double* h_prev = t == 0 ? zeros.data() : tr.h.row(t - 1);
    const double* c_prev = t == 0 ? zeros.data() : tr.c.row(t - 1);
    step_into(lstm, x, h_prev, c_prev, tr, t);
  }
}

void check_lstm_shapes(const LstmParams& p, const char* what) {
  const std::size_t h = p.hidden_dim;
  const std::size_t n = p.input_dim;
  const bool ok = p.w_f.rows == h && p.w_f.cols == n && p.w_i.same_shape(p.w_f) &&
                  p.w_o.same_shape(p.w_f) && p.w_c.same_shape(p.w_f) &&
                  p.u_f.rows == h && p.u_f.cols == h && p.u_i.same_shape(p.u_f) &&
                  p.u_o.same_shape(p.u_f) && p.u_c.same_shape(p.u_f) &&
                  p.b_f.size() == h && p.b_i.size() == h && p.b_o.size() == h &&
                  p.b_c.size() == h;
  if (!ok) throw std::invalid_argument(std::string(what) + ": inconsistent LSTM shapes");
}

// BPTT through one scan direction, seeded with the gradient of the loss with
// respect to that direction's final hidden state.
void bptt_direction(const LstmParams& p, const DirectionTrace& tr,
                    const double* dh_final, const corpus::EmbeddingMatrix& emb,
                    LstmParams& acc, Mat* emb_grad) {
  const std::size_t steps = tr.h.rows;
  const std::size_t h = p.hidden_dim;
  const std::size_t n = p.input_dim;
  const Vec zeros(h, 0.0);
  Vec dh(dh_final, dh_final + h);
  Vec dc(h, 0.0);
  Vec da_f(h), da_i(h), da_o(h), da_g(h), dx;
  if (emb_grad != nullptr) dx.assign(n, 0.0);
  for (std::size_t t = steps; t-- > 0;) {
    const double* f = tr.f.row(t);
    const double* i = tr.i.row(t);
    const double* o = tr.o.row(t);
    const double* g = tr.g.row(t);
    const double* tc = tr.tanh_c.row(t);
    const double* c_prev = t == 0 ? zeros.data() : tr.c.row(t - 1);
    const double* h_prev = t == 0 ? zeros.data() : tr.h.row(t - 1);
    const double* x = emb.row(static_cast<std::size_t>(tr.token[t]));
    for (std::size_t k = 0; k < h; ++k) {
      const double dck = dc[k] + dh[k] * o[k] * (1.0 - tc[k] * tc[k]);
      const double dok = dh[k] * tc[k];
      const double dfk = dck * c_prev[k];
      const double dik = dck * g[k];
      const double dgk = dck * i[k];
      da_f[k] = dfk * f[k] * (1.0 - f[k]);
      da_i[k] = dik * i[k] * (1.0 - i[k]);
      da_o[k] = dok * o[k] * (1.0 - o[k]);
      da_g[k] = dgk * (1.0 - g[k] * g[k]);
      dc[k] = dck * f[k];  // carries to step t-1
    }
    outer_acc(acc.w_f.data(), h, n, da_f.data(), x);
    outer_acc(acc.w_i.data(), h, n, da_i.data(), x);
    outer_acc(acc.w_o.data(), h, n, da_o.data(), x);
    outer_acc(acc.w_c.data(), h, n, da_g.data(), x);
    outer_acc(acc.u_f.data(), h, h, da_f.data(), h_prev);
    outer_acc(acc.u_i.data(), h, h, da_i.data(), h_prev);
    outer_acc(acc.u_o.data(), h, h, da_o.data(), h_prev);
    outer_acc(acc.u_c.data(), h, h, da_g.data(), h_prev);
    axpy(h, 1.0, da_f.data(), acc.b_f.data());
    axpy(h, 1.0, da_i.data(), acc.b_i.data());
    axpy(h, 1.0, da_o.data(), acc.b_o.data());
    axpy(h, 1.0, da_g.data(), acc.b_c.data());
    std::fill(dh.begin(), dh.end(), 0.0);
    matvec_t_acc(p.u_f.data(), h, h, da_f.data(), dh.data());
    matvec_t_acc(p.u_i.data(), h, h, da_i.data(), dh.data());
    matvec_t_acc(p.u_o.data(), h, h, da_o.data(), dh.data());
    matvec_t_acc(p.u_c.data(), h, h, da_g.data(), dh.data());
    if (emb_grad != nullptr) {
      std::fill(dx.begin(), dx.end(), 0.0);
      matvec_t_acc(p.w_f.data(), h, n, da_f.data(), dx.data());
      matvec_t_acc(p.w_i.data(), h, n, da_i.data(), dx.data());
      matvec_t_acc(p.w_o.data(), h, n, da_o.data(), dx.data());
      matvec_t_acc(p.w_c.data(), h, n, da_g.data(), dx.data());
      axpy(n, 1.0, dx.data(), emb_grad->row(static_cast<std::size_t>(tr.token[t])));
    }
  }
}

}  // namespace

void LstmParams::assign(std::size_t input, std::size_t hidden) {
  input_dim = input;
  hidden_dim = hidden;
  for (Mat* m : {&w_f, &w_i, &w_o, &w_c}) m->assign(hidden, input);
  for (Mat* m : {&u_f, &u_i, &u_o, &u_c}) m->assign(hidden, hidden);
  for (Vec* b : {&b_f, &b_i, &b_o, &b_c}) b->assign(hidden, 0.0);
}

void validate_shapes(const ModelParams& p) {
  check_lstm_shapes(p.forward_lstm, "forward_lstm");
  check_lstm_shapes(p.backward_lstm, "backward_lstm");
  if (p.backward_lstm.hidden_dim != p.forward_lstm.hidden_dim ||
      p.backward_lstm.input_dim != p.forward_lstm.input_dim) {
    throw std::invalid_argument("LSTM directions disagree on dimensions");
  }
  if (p.embedding.cols != p.forward_lstm.input_dim) {
    throw std::invalid_argument("embedding width does not match LSTM input dimension");
  }
  if (p.dense_b.size() < 2) throw std::invalid_argument("need at least two classes");
  if (p.dense_w.rows != p.dense_b.size() || p.dense_w.cols != 2 * p.hidden()) {
    throw std::invalid_argument("dense head shape mismatch");
  }
}

double sigmoid(double x) {
  x = std::clamp(x, -40.0, 40.0);
  return 1.0 / (1.0 + std::exp(-x));
}

void lstm_cell_forward(std::span<const double> x, const LstmState& prev,
                       const LstmParams& p, LstmState& next, GateRecord& gates) {
  check_lstm_shapes(p, "lstm_cell_forward");
  if (x.size() != p.input_dim || prev.h.size() != p.hidden_dim ||
      prev.c.size() != p.hidden_dim) {
    throw std::invalid_argument("lstm_cell_forward: dimension mismatch");
  }
  const std::size_t h = p.hidden_dim;
  gates.f.assign(h, 0.0);
  gates.i.assign(h, 0.0);
  gates.o.assign(h, 0.0);
  gates.candidate.assign(h, 0.0);
  next.h.assign(h, 0.0);
  next.c.assign(h, 0.0);
  gate_preact(p.w_f, p.u_f, p.b_f, x.data(), prev.h.data(), gates.f.data());
  gate_preact(p.w_i, p.u_i, p.b_i, x.data(), prev.h.data(), gates.i.data());
  gate_preact(p.w_o, p.u_o, p.b_o, x.data(), prev.h.data(), gates.o.data());
  gate_preact(p.w_c, p.u_c, p.b_c, x.data(), prev.h.data(), gates.candidate.data());
  for (std::size_t k = 0; k < h; ++k) {
    gates.f[k] = sigmoid(gates.f[k]);
    gates.i[k] = sigmoid(gates.i[k]);
    gates.o[k] = sigmoid(gates.o[k]);
    gates.candidate[k] = std::tanh(gates.candidate[k]);
    next.c[k] = gates.f[k] * prev.c[k] + gates.i[k] * gates.candidate[k];
    next.h[k] = gates.o[k] * std::tanh(next.c[k]);
  }
}

void DirectionTrace::assign(std::size_t steps, std::size_t hidden) {
  for (Mat* m : {&f, &i, &o, &g, &c, &h, &tanh_c}) m->assign(steps, hidden);
  token.assign(steps, 0);
}

void bilstm_forward(const corpus::EncodedDocument& doc, const ModelParams& p,
                    ForwardTrace& trace) {
  validate_shapes(p);
  if (doc.true_length == 0) throw std::invalid_argument("empty sequence");
  const std::size_t t_len = doc.true_length;
  const std::size_t h = p.hidden();
  const std::size_t n_classes = p.classes();
  for (std::size_t t = 0; t < t_len; ++t) {
    const std::int32_t tok = doc.indices.at(t);
    if (tok < 0 || static_cast<std::size_t>(tok) >= p.embedding.rows) {
      throw std::invalid_argument("token index out of embedding range");
    }
  }
  trace.true_len = t_len;
  const std::span<const std::int32_t> tokens(doc.indices.data(), t_len);
  scan_direction(p, p.forward_lstm, tokens, /*reversed=*/false, trace.fwd);
  scan_direction(p, p.backward_lstm, tokens, /*reversed=*/true, trace.bwd);

  trace.concat.assign(2 * h, 0.0);
  std::copy_n(trace.fwd.h.row(t_len - 1), h, trace.concat.data());
  std::copy_n(trace.bwd.h.row(t_len - 1), h, trace.concat.data() + h);

  trace.logits = p.dense_b;
  matvec_acc(p.dense_w.data(), n_classes, 2 * h, trace.concat.data(), trace.logits.data());

  trace.probs.assign(n_classes, 0.0);
  const double max_logit = *std::max_element(trace.logits.begin(), trace.logits.end());
  double sum = 0.0;
  for (std::size_t l = 0; l < n_classes; ++l) {
    trace.probs[l] = std::exp(trace.logits[l] - max_logit);
    sum += trace.probs[l];
  }
  for (double& pr : trace.probs) pr /= sum;
}

double loss(const Vec& probs, int label) {
  if (label < 0 || static_cast<std::size_t>(label) >= probs.size()) {
    throw std::invalid_argument("label out of range");
  }
  const double p = std::max(probs[static_cast<std::size_t>(label)], 1e-12);
  return -std::log(p);
}

int argmax_class(std::span<const double> probs) {
  int best = 0;
  for (std::size_t l = 1; l < probs.size(); ++l) {
    if (probs[l] > probs[static_cast<std::size_t>(best)]) best = static_cast<int>(l);
  }
  return best;
}

void Gradients::shape_like(const ModelParams& p) {
  fwd.assign(p.input_dim(), p.hidden());
  bwd.assign(p.input_dim(), p.hidden());
  dense_w.assign(p.classes(), 2 * p.hidden());
  dense_b.assign(p.classes(), 0.0);
  embedding_enabled = p.trainable_embedding;
  if (embedding_enabled) {
    embedding.assign(p.embedding.rows, p.embedding.cols);
  } else {
    embedding = Mat{};
  }
}

void Gradients::zero() {
  for (LstmParams* d : {&fwd, &bwd}) {
    for (Mat* m : {&d->w_f, &d->w_i, &d->w_o, &d->w_c, &d->u_f, &d->u_i, &d->u_o, &d->u_c}) {
      std::fill(m->v.begin(), m->v.end(), 0.0);
    }
    for (Vec* b : {&d->b_f, &d->b_i, &d->b_o, &d->b_c}) std::fill(b->begin(), b->end(), 0.0);
  }
  std::fill(dense_w.v.begin(), dense_w.v.end(), 0.0);
  std::fill(dense_b.begin(), dense_b.end(), 0.0);
  std::fill(embedding.v.begin(), embedding.v.end(), 0.0);
}

void backward(const ForwardTrace& trace, int label, const ModelParams& p, Gradients& acc) {
  const std::size_t h = p.hidden();
  const std::size_t n_classes = p.classes();
  if (label < 0 || static_cast<std::size_t>(label) >= n_classes) {
    throw std::invalid_argument("label out of range");
  }
  if (trace.true_len == 0 || trace.fwd.h.rows != trace.true_len ||
      trace.fwd.h.cols != h || trace.probs.size() != n_classes ||
      trace.concat.size() != 2 * h) {
    throw std::invalid_argument("stale forward trace: shape mismatch with parameters");
  }
  if (acc.fwd.hidden_dim != h || acc.fwd.input_dim != p.input_dim() ||
      acc.dense_b.size() != n_classes || acc.embedding_enabled != p.trainable_embedding) {
    throw std::invalid_argument("gradient record shape mismatch");
  }

  // Softmax + cross-entropy: dlogits = probs - onehot(label).
  Vec dlogits = trace.probs;
  dlogits[static_cast<std::size_t>(label)] -= 1.0;
  axpy(n_classes, 1.0, dlogits.data(), acc.dense_b.data());
  outer_acc(acc.dense_w.data(), n_classes, 2 * h, dlogits.data(), trace.concat.data());

  Vec dconcat(2 * h, 0.0);
  matvec_t_acc(p.dense_w.data(), n_classes, 2 * h, dlogits.data(), dconcat.data());

  Mat* emb_grad = acc.embedding_enabled ? &acc.embedding : nullptr;
  bptt_direction(p.forward_lstm, trace.fwd, dconcat.data(), p.embedding, acc.fwd, emb_grad);
  bptt_direction(p.backward_lstm, trace.bwd, dconcat.data() + h, p.embedding, acc.bwd, emb_grad);
}

Gradients backward(const ForwardTrace& trace, int label, const ModelParams& p) {
  Gradients g;
  g.shape_like(p);
  backward(trace, label, p, g);
  return g;
}

}  // namespace bdlstm::nn
