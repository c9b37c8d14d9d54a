#pragma once

#include <cmath>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "bdlstm/nn.hpp"

namespace testsupport {

struct GradCheckResult {
  double max_rel_err = 0.0;
  std::size_t coords_checked = 0;
  std::string worst_tensor;
};

inline double loss_of(const bdlstm::nn::ModelParams& p,
                      const bdlstm::corpus::EncodedDocument& doc, int label) {
  bdlstm::nn::ForwardTrace trace;
  bdlstm::nn::bilstm_forward(doc, p, trace);
  return bdlstm::nn::loss(trace.probs, label);
}

// Central finite differences against reverse-mode gradients on
// coords_per_tensor random coordinates of every trainable tensor. The relative
// error denominator is floored at 1e-3 so near-zero coordinates are judged on
// absolute agreement.
inline GradCheckResult finite_difference_check(bdlstm::nn::ModelParams& params,
                                               const bdlstm::corpus::EncodedDocument& doc,
                                               int label, std::size_t coords_per_tensor,
                                               std::uint64_t seed, double eps = 1e-4) {
  using bdlstm::Vec;
  bdlstm::nn::ForwardTrace trace;
  bdlstm::nn::bilstm_forward(doc, params, trace);
  const bdlstm::nn::Gradients grads = bdlstm::nn::backward(trace, label, params);

  std::vector<std::pair<std::string, std::pair<Vec*, const Vec*>>> tensors;
  const auto add_lstm = [&](const char* prefix, bdlstm::nn::LstmParams& p,
                            const bdlstm::nn::LstmParams& g) {
    const std::string pre(prefix);
    tensors.push_back({pre + ".w_f", {&p.w_f.v, &g.w_f.v}});
    tensors.push_back({pre + ".w_i", {&p.w_i.v, &g.w_i.v}});
    tensors.push_back({pre + ".w_o", {&p.w_o.v, &g.w_o.v}});
    tensors.push_back({pre + ".w_c", {&p.w_c.v, &g.w_c.v}});
    tensors.push_back({pre + ".u_f", {&p.u_f.v, &g.u_f.v}});
    tensors.push_back({pre + ".u_i", {&p.u_i.v, &g.u_i.v}});
    tensors.push_back({pre + ".u_o", {&p.u_o.v, &g.u_o.v}});
    tensors.push_back({pre + ".u_c", {&p.u_c.v, &g.u_c.v}});
    tensors.push_back({pre + ".b_f", {&p.b_f, &g.b_f}});
    tensors.push_back({pre + ".b_i", {&p.b_i, &g.b_i}});
    tensors.push_back({pre + ".b_o", {&p.b_o, &g.b_o}});
    tensors.push_back({pre + ".b_c", {&p.b_c, &g.b_c}});
  };
  add_lstm("fwd", params.forward_lstm, grads.fwd);
  add_lstm("bwd", params.backward_lstm, grads.bwd);
  tensors.push_back({"dense_w", {&params.dense_w.v, &grads.dense_w.v}});
  tensors.push_back({"dense_b", {&params.dense_b, &grads.dense_b}});
  if (params.trainable_embedding) {
    tensors.push_back({"embedding", {&params.embedding.v, &grads.embedding.v}});
  }

  std::mt19937_64 rng(seed);
  GradCheckResult result;
  for (auto& [name, pair] : tensors) {
    Vec& values = *pair.first;
    const Vec& grad = *pair.second;
    std::uniform_int_distribution<std::size_t> coord_dist(0, values.size() - 1);
    for (std::size_t k = 0; k < coords_per_tensor; ++k) {
      const std::size_t c = coord_dist(rng);
      const double saved = values[c];
      values[c] = saved + eps;
      const double lp = loss_of(params, doc, label);
      values[c] = saved - eps;
      const double lm = loss_of(params, doc, label);
      values[c] = saved;
      const double fd = (lp - lm) / (2.0 * eps);
      const double g = grad[c];
      const double denom = std::max({std::fabs(g), std::fabs(fd), 1e-3});
      const double rel = std::fabs(g - fd) / denom;
      if (rel > result.max_rel_err) {
        result.max_rel_err = rel;
        result.worst_tensor = name;
      }
      ++result.coords_checked;
    }
  }
  return result;
}

}  // namespace testsupport
