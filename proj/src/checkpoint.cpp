#include "bdlstm/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "bdlstm/errors.hpp"
#include "bdlstm/util.hpp"

namespace bdlstm::checkpoint {

namespace {

using nlohmann::json;

// Tensor payloads are raw little-endian doubles.
static_assert(std::endian::native == std::endian::little,
              "checkpoint tensor layout assumes a little-endian host");

json tensor_to_json(const double* data, std::size_t n, std::vector<std::size_t> shape) {
  json t;
  t["shape"] = std::move(shape);
  std::vector<std::uint8_t> bytes(n * sizeof(double));
  std::memcpy(bytes.data(), data, bytes.size());
  t["data"] = json::binary(std::move(bytes));
  return t;
}

void tensor_from_json(const json& t, double* data, std::size_t n,
                      const std::vector<std::size_t>& expected_shape) {
  const auto shape = t.at("shape").get<std::vector<std::size_t>>();
  if (shape != expected_shape) throw InputError("checkpoint tensor shape mismatch");
  const auto& bytes = t.at("data").get_binary();
  if (bytes.size() != n * sizeof(double)) {
    throw InputError("checkpoint tensor payload size mismatch");
  }
  std::memcpy(data, bytes.data(), bytes.size());
}

template <typename Fn>
void visit_lstm_tensors(const std::string& prefix, const nn::LstmParams& p, Fn&& fn) {
  const std::size_t h = p.hidden_dim, n = p.input_dim;
  fn(prefix + ".w_f", p.w_f.data(), h * n, std::vector<std::size_t>{h, n});
  fn(prefix + ".w_i", p.w_i.data(), h * n, std::vector<std::size_t>{h, n});
  fn(prefix + ".w_o", p.w_o.data(), h * n, std::vector<std::size_t>{h, n});
  fn(prefix + ".w_c", p.w_c.data(), h * n, std::vector<std::size_t>{h, n});
  fn(prefix + ".u_f", p.u_f.data(), h * h, std::vector<std::size_t>{h, h});
  fn(prefix + ".u_i", p.u_i.data(), h * h, std::vector<std::size_t>{h, h});
  fn(prefix + ".u_o", p.u_o.data(), h * h, std::vector<std::size_t>{h, h});
  fn(prefix + ".u_c", p.u_c.data(), h * h, std::vector<std::size_t>{h, h});
  fn(prefix + ".b_f", p.b_f.data(), h, std::vector<std::size_t>{h});
  fn(prefix + ".b_i", p.b_i.data(), h, std::vector<std::size_t>{h});
  fn(prefix + ".b_o", p.b_o.data(), h, std::vector<std::size_t>{h});
  fn(prefix + ".b_c", p.b_c.data(), h, std::vector<std::size_t>{h});
}

template <typename Fn>
void visit_lstm_tensors_mut(const std::string& prefix, nn::LstmParams& p, Fn&& fn) {
  const std::size_t h = p.hidden_dim, n = p.input_dim;
  fn(prefix + ".w_f", p.w_f.data(), h * n, std::vector<std::size_t>{h, n});
  fn(prefix + ".w_i", p.w_i.data(), h * n, std::vector<std::size_t>{h, n});
  fn(prefix + ".w_o", p.w_o.data(), h * n, std::vector<std::size_t>{h, n});
  fn(prefix + ".w_c", p.w_c.data(), h * n, std::vector<std::size_t>{h, n});
  fn(prefix + ".u_f", p.u_f.data(), h * h, std::vector<std::size_t>{h, h});
  fn(prefix + ".u_i", p.u_i.data(), h * h, std::vector<std::size_t>{h, h});
  fn(prefix + ".u_o", p.u_o.data(), h * h, std::vector<std::size_t>{h, h});
  fn(prefix + ".u_c", p.u_c.data(), h * h, std::vector<std::size_t>{h, h});
  fn(prefix + ".b_f", p.b_f.data(), h, std::vector<std::size_t>{h});
  fn(prefix + ".b_i", p.b_i.data(), h, std::vector<std::size_t>{h});
  fn(prefix + ".b_o", p.b_o.data(), h, std::vector<std::size_t>{h});
  fn(prefix + ".b_c", p.b_c.data(), h, std::vector<std::size_t>{h});
}

json train_cfg_to_json(const trainer::TrainConfig& cfg) {
  json j;
  j["epochs"] = cfg.epochs;
  j["batch_size"] = cfg.batch_size;
  j["learning_rate"] = cfg.learning_rate;
  j["optimizer"] = trainer::optimizer_name(cfg.optimizer);
  j["adam_beta1"] = cfg.adam_beta1;
  j["adam_beta2"] = cfg.adam_beta2;
  j["adam_epsilon"] = cfg.adam_epsilon;
  j["seed"] = cfg.seed;
  j["hidden_size"] = cfg.hidden_size;
  j["max_len"] = cfg.max_len;
  j["embedding_dim"] = cfg.embedding_dim;
  j["freeze_embeddings"] = cfg.freeze_embeddings;
  return j;
}

trainer::TrainConfig train_cfg_from_json(const json& j) {
  trainer::TrainConfig cfg;
  cfg.epochs = j.at("epochs").get<std::size_t>();
  cfg.batch_size = j.at("batch_size").get<std::size_t>();
  cfg.learning_rate = j.at("learning_rate").get<double>();
  cfg.optimizer = trainer::parse_optimizer(j.at("optimizer").get<std::string>());
  cfg.adam_beta1 = j.at("adam_beta1").get<double>();
  cfg.adam_beta2 = j.at("adam_beta2").get<double>();
  cfg.adam_epsilon = j.at("adam_epsilon").get<double>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.hidden_size = j.at("hidden_size").get<std::size_t>();
  cfg.max_len = j.at("max_len").get<std::size_t>();
  cfg.embedding_dim = j.at("embedding_dim").get<std::size_t>();
  cfg.freeze_embeddings = j.at("freeze_embeddings").get<bool>();
  return cfg;
}

}  // namespace

void save(const std::filesystem::path& path, const nn::ModelParams& params,
          const corpus::Vocabulary& vocab, const std::vector<std::string>& class_names,
          const trainer::TrainConfig& train_cfg, std::string_view config_hash) {
  nn::validate_shapes(params);
  json j;
  j["format"] = "bdlstm-checkpoint";
  j["version"] = 1;
  j["config_hash"] = std::string(config_hash);
  j["class_names"] = class_names;
  std::vector<std::string> tokens(vocab.tokens().begin(), vocab.tokens().end());
  j["vocab"] = std::move(tokens);
  j["train_config"] = train_cfg_to_json(train_cfg);
  j["hidden"] = params.hidden();
  j["input_dim"] = params.input_dim();
  j["classes"] = params.classes();
  j["trainable_embedding"] = params.trainable_embedding;

  json tensors;
  tensors["embedding"] = tensor_to_json(params.embedding.data(), params.embedding.size(),
                                        {params.embedding.rows, params.embedding.cols});
  visit_lstm_tensors("fwd", params.forward_lstm,
                     [&](const std::string& name, const double* d, std::size_t n,
                         std::vector<std::size_t> shape) {
                       tensors[name] = tensor_to_json(d, n, std::move(shape));
                     });
  visit_lstm_tensors("bwd", params.backward_lstm,
                     [&](const std::string& name, const double* d, std::size_t n,
                         std::vector<std::size_t> shape) {
                       tensors[name] = tensor_to_json(d, n, std::move(shape));
                     });
  tensors["dense_w"] = tensor_to_json(params.dense_w.data(), params.dense_w.size(),
                                      {params.dense_w.rows, params.dense_w.cols});
  tensors["dense_b"] =
      tensor_to_json(params.dense_b.data(), params.dense_b.size(), {params.dense_b.size()});
  j["tensors"] = std::move(tensors);

  const auto cbor = json::to_cbor(j);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write checkpoint: " + path.string());
  out.write(reinterpret_cast<const char*>(cbor.data()),
            static_cast<std::streamsize>(cbor.size()));
  if (!out) throw InputError("write failed: " + path.string());
}

Loaded load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open checkpoint: " + path.string());
  std::vector<std::uint8_t> cbor((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
  json j;
  try {
    j = json::from_cbor(cbor);
  } catch (const json::exception& e) {
    throw InputError("corrupt checkpoint " + path.string() + ": " + e.what());
  }
  if (j.value("format", "") != "bdlstm-checkpoint") {
    throw InputError("not a checkpoint file: " + path.string());
  }
  if (j.value("version", 0) != 1) {
    throw InputError("unsupported checkpoint version in " + path.string());
  }

  Loaded out;
  out.config_hash = j.at("config_hash").get<std::string>();
  out.class_names = j.at("class_names").get<std::vector<std::string>>();
  out.vocab = corpus::Vocabulary::from_tokens(j.at("vocab").get<std::vector<std::string>>());
  out.train_cfg = train_cfg_from_json(j.at("train_config"));

  const auto hidden = j.at("hidden").get<std::size_t>();
  const auto input_dim = j.at("input_dim").get<std::size_t>();
  const auto classes = j.at("classes").get<std::size_t>();
  nn::ModelParams& p = out.params;
  p.trainable_embedding = j.at("trainable_embedding").get<bool>();
  p.embedding.assign(out.vocab.size(), input_dim);
  p.forward_lstm.assign(input_dim, hidden);
  p.backward_lstm.assign(input_dim, hidden);
  p.dense_w.assign(classes, 2 * hidden);
  p.dense_b.assign(classes, 0.0);

  const json& tensors = j.at("tensors");
  tensor_from_json(tensors.at("embedding"), p.embedding.data(), p.embedding.size(),
                   {p.embedding.rows, p.embedding.cols});
  visit_lstm_tensors_mut("fwd", p.forward_lstm,
                         [&](const std::string& name, double* d, std::size_t n,
                             std::vector<std::size_t> shape) {
                           tensor_from_json(tensors.at(name), d, n, shape);
                         });
  visit_lstm_tensors_mut("bwd", p.backward_lstm,
                         [&](const std::string& name, double* d, std::size_t n,
                             std::vector<std::size_t> shape) {
                           tensor_from_json(tensors.at(name), d, n, shape);
                         });
  tensor_from_json(tensors.at("dense_w"), p.dense_w.data(), p.dense_w.size(),
                   {p.dense_w.rows, p.dense_w.cols});
  tensor_from_json(tensors.at("dense_b"), p.dense_b.data(), p.dense_b.size(),
                   {p.dense_b.size()});
  nn::validate_shapes(p);
  return out;
}

std::string file_digest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open file for digest: " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return to_hex64(fnv1a64(bytes));
}

}  // namespace bdlstm::checkpoint
