#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "bdlstm/nn.hpp"
#include "bdlstm/trainer.hpp"

namespace bdlstm::checkpoint {

// CBOR container holding shapes, all parameter tensors (row-major doubles),
// the vocabulary and class names, the training config and the config hash.
// Round-trips losslessly: save(load(f)) reproduces f byte for byte.
void save(const std::filesystem::path& path, const nn::ModelParams& params,
          const corpus::Vocabulary& vocab, const std::vector<std::string>& class_names,
          const trainer::TrainConfig& train_cfg, std::string_view config_hash);

struct Loaded {
  nn::ModelParams params;
  corpus::Vocabulary vocab;
  std::vector<std::string> class_names;
  trainer::TrainConfig train_cfg;
  std::string config_hash;
};
Loaded load(const std::filesystem::path& path);

// 64-bit FNV-1a of the file bytes, as hex.
std::string file_digest(const std::filesystem::path& path);

}  // namespace bdlstm::checkpoint
