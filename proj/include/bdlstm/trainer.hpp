#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string_view>

#include "bdlstm/nn.hpp"

namespace bdlstm::trainer {

enum class Optimizer { adam, sgd };
const char* optimizer_name(Optimizer o);
Optimizer parse_optimizer(std::string_view name);

struct TrainConfig {
  std::size_t epochs = 5;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  Optimizer optimizer = Optimizer::adam;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::uint64_t seed = 0;
  std::size_t hidden_size = 128;
  std::size_t max_len = 500;
  std::size_t embedding_dim = 100;
  bool freeze_embeddings = true;
};
void validate(const TrainConfig& cfg);

struct OptimizerState {
  std::vector<Vec> m, v;  // one slot per trainable tensor (Adam only)
  std::uint64_t step = 0;
};

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  double mean_loss = 0.0;
  double seconds = 0.0;
};
using EpochCallback = std::function<void(const EpochLog&)>;

// Shuffled visit order for one epoch; a permutation of [0, n).
std::vector<std::size_t> epoch_order(std::size_t n, std::mt19937_64& rng);

// Glorot-uniform weights, zero biases except forget-gate bias = 1.
nn::ModelParams init_params(const corpus::EmbeddingMatrix& embedding, std::size_t hidden,
                            std::size_t n_classes, bool trainable_embedding,
                            std::mt19937_64& rng);

void optimizer_step(nn::ModelParams& params, const nn::Gradients& grads,
                    OptimizerState& state, const TrainConfig& cfg);

// Fully determined by (docs, cfg): one seeded random source drives
// initialization and the per-epoch shuffles.
nn::ModelParams train(std::span<const corpus::RawDocument> docs, std::size_t n_classes,
                      const corpus::Vocabulary& vocab,
                      const corpus::EmbeddingMatrix& embeddings, const TrainConfig& cfg,
                      const EpochCallback& on_epoch = {});

nn::ModelParams train_encoded(std::span<const corpus::EncodedDocument> docs,
                              std::size_t n_classes,
                              const corpus::EmbeddingMatrix& embeddings,
                              const TrainConfig& cfg, const EpochCallback& on_epoch = {});

}  // namespace bdlstm::trainer
