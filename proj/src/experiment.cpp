#include "bdlstm/experiment.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "bdlstm/checkpoint.hpp"
#include "bdlstm/errors.hpp"
#include "bdlstm/util.hpp"

namespace bdlstm::experiment {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr const char* kVocabCache = "vocab.txt";
constexpr const char* kEmbeddingCache = "embeddings.bin";

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{
      "train_tsv",    "test_tsv",     "embedding_file", "embedding_dim",
      "classes",      "triggers",     "rates",          "repeats",
      "source_class", "target_class", "poison_insertion", "backdoor_insertion",
      "backdoor_count", "vocab_size", "max_len",        "hidden_size",
      "epochs",       "batch_size",   "learning_rate",  "optimizer",
      "adam_beta1",   "adam_beta2",   "adam_epsilon",   "freeze_embeddings",
      "seed",         "output_dir"};
  return keys;
}

fs::path resolve(const fs::path& base, const fs::path& p) {
  if (p.is_absolute()) return p.lexically_normal();
  return (base / p).lexically_normal();
}

std::string fmt_rate(double rate) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", rate);
  return buf;
}

int run_guarded(std::ostream& err, const std::function<void()>& fn) {
  try {
    fn();
    return 0;
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

std::size_t drop_empty_docs(corpus::Dataset& data) {
  const std::size_t before = data.docs.size();
  std::erase_if(data.docs,
                [](const corpus::RawDocument& d) { return corpus::tokenize(d.text).empty(); });
  return before - data.docs.size();
}

struct LoadedCorpora {
  corpus::Dataset train, test;
  std::size_t dropped = 0;
};

LoadedCorpora load_corpora(const ExperimentConfig& cfg) {
  LoadedCorpora out;
  const std::vector<std::string>* class_list = cfg.classes.empty() ? nullptr : &cfg.classes;
  out.train = corpus::load_corpus_tsv(cfg.train_tsv, class_list);
  // Pin the test-set label mapping to the train-set class order.
  out.test = corpus::load_corpus_tsv(cfg.test_tsv, &out.train.class_names);
  out.dropped = drop_empty_docs(out.train) + drop_empty_docs(out.test);
  if (out.train.docs.empty()) throw InputError("empty corpus");
  if (out.test.docs.empty()) throw InputError("empty test corpus");
  if (out.train.class_count() < 2) {
    throw InputError("corpus declares fewer than two classes");
  }
  if (out.train.class_index(cfg.source_class) < 0) {
    throw InputError("source class '" + cfg.source_class + "' not present in the corpus");
  }
  if (out.train.class_index(cfg.target_class) < 0) {
    throw InputError("target class '" + cfg.target_class + "' not present in the corpus");
  }
  return out;
}

poison::TriggerSpec trigger_at(const ExperimentConfig& cfg, std::size_t index) {
  if (index >= cfg.triggers.size()) {
    throw InputError("trigger index " + std::to_string(index) + " out of range (have " +
                     std::to_string(cfg.triggers.size()) + " triggers)");
  }
  return poison::TriggerSpec::from_sentence(cfg.triggers[index]);
}

// Removes files created by a failed invocation.
class ArtifactGuard {
 public:
  void track(fs::path p) { files_.push_back(std::move(p)); }
  void commit() { files_.clear(); }
  ~ArtifactGuard() {
    for (const auto& f : files_) {
      std::error_code ec;
      fs::remove(f, ec);
    }
  }

 private:
  std::vector<fs::path> files_;
};

nn::ModelParams clean_baseline(const ExperimentConfig& cfg, const LoadedCorpora& data,
                               const corpus::Vocabulary& vocab,
                               const corpus::EmbeddingMatrix& embeddings,
                               std::uint64_t seed, const std::string& hash,
                               std::ostream& out) {
  const fs::path path = cfg.output_dir / ("clean_seed" + std::to_string(seed) + ".ckpt");
  if (fs::exists(path)) {
    auto loaded = checkpoint::load(path);
    if (loaded.config_hash == hash) {
      out << "clean baseline: reusing " << path.string() << "\n";
      return std::move(loaded.params);
    }
    out << "clean baseline: config changed, retraining\n";
  }
  trainer::TrainConfig tc = train_config_of(cfg, seed);
  out << "training clean baseline (seed " << seed << ")\n";
  auto params = trainer::train(data.train.docs, data.train.class_count(), vocab,
                               embeddings, tc, [&](const trainer::EpochLog& log) {
                                 out << "  epoch " << log.epoch << "/" << tc.epochs
                                     << "  loss " << log.mean_loss << "  (" << log.seconds
                                     << "s)\n";
                               });
  checkpoint::save(path, params, vocab, data.train.class_names, tc, hash);
  return params;
}

}  // namespace

ExperimentConfig config_from_json_text(std::string_view text, const fs::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw InputError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw InputError("config root must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (known_keys().count(key) == 0) {
      throw InputError("unknown config key: '" + key + "'");
    }
  }
  ExperimentConfig cfg;
  try {
    cfg.train_tsv = resolve(base_dir, j.at("train_tsv").get<std::string>());
    cfg.test_tsv = resolve(base_dir, j.at("test_tsv").get<std::string>());
    cfg.embedding_file = resolve(base_dir, j.at("embedding_file").get<std::string>());
    cfg.embedding_dim = j.at("embedding_dim").get<std::size_t>();
    cfg.triggers = j.at("triggers").get<std::vector<std::string>>();
    cfg.rates = j.at("rates").get<std::vector<double>>();
    cfg.source_class = j.at("source_class").get<std::string>();
    cfg.target_class = j.at("target_class").get<std::string>();
    if (j.contains("classes")) cfg.classes = j["classes"].get<std::vector<std::string>>();
    if (j.contains("repeats")) cfg.repeats = j["repeats"].get<std::size_t>();
    if (j.contains("poison_insertion")) {
      cfg.poison_insertion =
          poison::parse_insertion_policy(j["poison_insertion"].get<std::string>());
    }
    if (j.contains("backdoor_insertion")) {
      cfg.backdoor_insertion =
          poison::parse_insertion_policy(j["backdoor_insertion"].get<std::string>());
    }
    if (j.contains("backdoor_count")) cfg.backdoor_count = j["backdoor_count"].get<std::size_t>();
    if (j.contains("vocab_size")) cfg.vocab_size = j["vocab_size"].get<std::size_t>();
    if (j.contains("max_len")) cfg.max_len = j["max_len"].get<std::size_t>();
    if (j.contains("hidden_size")) cfg.hidden_size = j["hidden_size"].get<std::size_t>();
    if (j.contains("epochs")) cfg.epochs = j["epochs"].get<std::size_t>();
    if (j.contains("batch_size")) cfg.batch_size = j["batch_size"].get<std::size_t>();
    if (j.contains("learning_rate")) cfg.learning_rate = j["learning_rate"].get<double>();
    if (j.contains("optimizer")) {
      cfg.optimizer = trainer::parse_optimizer(j["optimizer"].get<std::string>());
    }
    if (j.contains("adam_beta1")) cfg.adam_beta1 = j["adam_beta1"].get<double>();
    if (j.contains("adam_beta2")) cfg.adam_beta2 = j["adam_beta2"].get<double>();
    if (j.contains("adam_epsilon")) cfg.adam_epsilon = j["adam_epsilon"].get<double>();
    if (j.contains("freeze_embeddings")) {
      cfg.freeze_embeddings = j["freeze_embeddings"].get<bool>();
    }
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("output_dir")) {
      cfg.output_dir = resolve(base_dir, j["output_dir"].get<std::string>());
    } else {
      cfg.output_dir = resolve(base_dir, cfg.output_dir);
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("bad config value: ") + e.what());
  }
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json_text(ss.str(), path.parent_path());
}

void validate(const ExperimentConfig& cfg) {
  const std::pair<const char*, const fs::path*> required_files[] = {
      {"train_tsv", &cfg.train_tsv},
      {"test_tsv", &cfg.test_tsv},
      {"embedding_file", &cfg.embedding_file}};
  for (const auto& [name, path] : required_files) {
    if (!fs::exists(*path)) {
      throw InputError(std::string(name) + " does not exist: " + path->string());
    }
  }
  if (cfg.triggers.empty()) throw InputError("config needs at least one trigger");
  for (const auto& t : cfg.triggers) {
    if (corpus::tokenize(t).empty()) {
      throw InputError("trigger has no tokens: '" + t + "'");
    }
  }
  if (cfg.rates.empty()) throw InputError("config needs at least one poisoning rate");
  for (const double r : cfg.rates) {
    if (!(r >= 0.0 && r <= 1.0)) {
      throw InputError("poisoning rate " + std::to_string(r) + " outside [0, 1]");
    }
  }
  if (cfg.repeats < 1) throw InputError("repeats must be >= 1");
  if (cfg.source_class == cfg.target_class) {
    throw InputError("source class must differ from target class");
  }
  if (!cfg.classes.empty()) {
    const auto has = [&](const std::string& c) {
      return std::find(cfg.classes.begin(), cfg.classes.end(), c) != cfg.classes.end();
    };
    if (!has(cfg.source_class) || !has(cfg.target_class)) {
      throw InputError("source/target class missing from the declared class list");
    }
  }
  if (cfg.vocab_size < 3) throw InputError("vocab_size must be >= 3");
  if (cfg.embedding_dim < 1) throw InputError("embedding_dim must be >= 1");
  trainer::validate(train_config_of(cfg, cfg.seed));
}

std::string config_hash(const ExperimentConfig& cfg) {
  json j;
  j["train_tsv"] = cfg.train_tsv.string();
  j["test_tsv"] = cfg.test_tsv.string();
  j["embedding_file"] = cfg.embedding_file.string();
  j["embedding_dim"] = cfg.embedding_dim;
  j["classes"] = cfg.classes;
  j["triggers"] = cfg.triggers;
  j["rates"] = cfg.rates;
  j["repeats"] = cfg.repeats;
  j["source_class"] = cfg.source_class;
  j["target_class"] = cfg.target_class;
  j["poison_insertion"] = poison::insertion_policy_name(cfg.poison_insertion);
  j["backdoor_insertion"] = poison::insertion_policy_name(cfg.backdoor_insertion);
  j["backdoor_count"] = cfg.backdoor_count;
  j["vocab_size"] = cfg.vocab_size;
  j["max_len"] = cfg.max_len;
  j["hidden_size"] = cfg.hidden_size;
  j["epochs"] = cfg.epochs;
  j["batch_size"] = cfg.batch_size;
  j["learning_rate"] = cfg.learning_rate;
  j["optimizer"] = trainer::optimizer_name(cfg.optimizer);
  j["adam_beta1"] = cfg.adam_beta1;
  j["adam_beta2"] = cfg.adam_beta2;
  j["adam_epsilon"] = cfg.adam_epsilon;
  j["freeze_embeddings"] = cfg.freeze_embeddings;
  j["seed"] = cfg.seed;
  return to_hex64(fnv1a64(j.dump()));
}

trainer::TrainConfig train_config_of(const ExperimentConfig& cfg, std::uint64_t seed) {
  trainer::TrainConfig tc;
  tc.epochs = cfg.epochs;
  tc.batch_size = cfg.batch_size;
  tc.learning_rate = cfg.learning_rate;
  tc.optimizer = cfg.optimizer;
  tc.adam_beta1 = cfg.adam_beta1;
  tc.adam_beta2 = cfg.adam_beta2;
  tc.adam_epsilon = cfg.adam_epsilon;
  tc.seed = seed;
  tc.hidden_size = cfg.hidden_size;
  tc.max_len = cfg.max_len;
  tc.embedding_dim = cfg.embedding_dim;
  tc.freeze_embeddings = cfg.freeze_embeddings;
  return tc;
}

PreparedData load_prepared(const ExperimentConfig& cfg) {
  const fs::path vocab_path = cfg.output_dir / kVocabCache;
  const fs::path emb_path = cfg.output_dir / kEmbeddingCache;
  if (!fs::exists(vocab_path) || !fs::exists(emb_path)) {
    throw InputError("prepared caches not found in " + cfg.output_dir.string() +
                     "; run the prepare subcommand first");
  }
  PreparedData out;
  auto corpora = load_corpora(cfg);
  out.train = std::move(corpora.train);
  out.test = std::move(corpora.test);
  out.dropped_empty = corpora.dropped;
  out.vocab = corpus::load_vocabulary(vocab_path);
  out.embeddings = corpus::load_embedding_cache(emb_path);
  if (out.embeddings.rows != out.vocab.size() || out.embeddings.cols != cfg.embedding_dim) {
    throw InputError("embedding cache does not match the vocabulary/config; re-run prepare");
  }
  return out;
}

int cmd_prepare(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
  return run_guarded(err, [&] {
    auto corpora = load_corpora(cfg);
    fs::create_directories(cfg.output_dir);

    out << "train documents: " << corpora.train.docs.size() << "\n";
    out << "test documents:  " << corpora.test.docs.size() << "\n";
    if (corpora.dropped > 0) {
      out << "dropped " << corpora.dropped << " documents with no tokens\n";
    }
    const std::pair<const char*, const corpus::Dataset*> splits[] = {
        {"train", &corpora.train}, {"test", &corpora.test}};
    for (const auto& [split_name, split] : splits) {
      std::vector<std::size_t> counts(split->class_count(), 0);
      for (const auto& d : split->docs) counts[static_cast<std::size_t>(d.label)]++;
      out << split_name << " class counts:";
      for (std::size_t c = 0; c < counts.size(); ++c) {
        out << "  " << split->class_names[c] << "=" << counts[c];
      }
      out << "\n";
    }

    // Token-length histogram, buckets of 50.
    std::vector<std::size_t> hist;
    for (const auto& d : corpora.train.docs) {
      const std::size_t len = corpus::tokenize(d.text).size();
      const std::size_t bucket = len / 50;
      if (hist.size() <= bucket) hist.resize(bucket + 1, 0);
      ++hist[bucket];
    }
    out << "train length histogram (tokens):\n";
    for (std::size_t b = 0; b < hist.size(); ++b) {
      if (hist[b] == 0) continue;
      out << "  [" << b * 50 << ", " << (b + 1) * 50 << "): " << hist[b] << "\n";
    }

    const auto vocab = corpus::build_vocabulary(corpora.train.docs, cfg.vocab_size);
    corpus::save_vocabulary(cfg.output_dir / kVocabCache, vocab);
    const auto embeddings =
        corpus::load_embeddings(cfg.embedding_file, vocab, cfg.embedding_dim);
    std::size_t covered = 0;
    for (std::size_t r = corpus::kReservedTokens; r < embeddings.rows; ++r) {
      const double* row = embeddings.row(r);
      for (std::size_t c = 0; c < embeddings.cols; ++c) {
        if (row[c] != 0.0) {
          ++covered;
          break;
        }
      }
    }
    corpus::save_embedding_cache(cfg.output_dir / kEmbeddingCache, embeddings);
    out << "vocabulary size: " << vocab.size() << " (incl. pad/oov)\n";
    out << "embedding coverage: " << covered << "/" << vocab.tokens().size()
        << " tokens with non-zero vectors\n";
    out << "wrote " << (cfg.output_dir / kVocabCache).string() << "\n";
    out << "wrote " << (cfg.output_dir / kEmbeddingCache).string() << "\n";
  });
}

int cmd_attack(const ExperimentConfig& cfg, std::size_t trigger_index, double rate,
               std::optional<std::uint64_t> seed_opt, bool dump_sets, std::ostream& out,
               std::ostream& err) {
  return run_guarded(err, [&] {
    if (!(rate >= 0.0 && rate <= 1.0)) {
      throw InputError("poisoning rate " + std::to_string(rate) + " outside [0, 1]");
    }
    const std::uint64_t seed = seed_opt.value_or(cfg.seed);
    const std::string hash = config_hash(cfg);
    auto data = load_prepared(cfg);
    const auto trigger = trigger_at(cfg, trigger_index);

    poison::PoisonConfig pcfg;
    pcfg.trigger = trigger;
    pcfg.source_class = data.train.class_index(cfg.source_class);
    pcfg.target_class = data.train.class_index(cfg.target_class);
    pcfg.rate = rate;
    pcfg.poison_insertion = cfg.poison_insertion;
    pcfg.backdoor_insertion = cfg.backdoor_insertion;
    poison::validate(pcfg);

    ArtifactGuard guard;
    LoadedCorpora corpora{std::move(data.train), std::move(data.test), data.dropped_empty};
    const auto clean =
        clean_baseline(cfg, corpora, data.vocab, data.embeddings, seed, hash, out);
    const auto encoded_test =
        corpus::encode_all(corpora.test.docs, data.vocab, cfg.max_len);
    const double clean_acc = eval::round6(eval::test_accuracy(clean, encoded_test));

    const trainer::TrainConfig tc = train_config_of(cfg, seed);
    nn::ModelParams victim;
    std::vector<corpus::RawDocument> poison_docs;
    if (poison::poison_count_for(rate, corpora.train.docs.size()) == 0) {
      victim = clean;
      out << "rate rounds to zero poison samples; victim equals the clean model\n";
    } else {
      std::mt19937_64 poison_rng(eval::poison_stream_seed(seed, trigger, rate));
      poison_docs = poison::make_poison_set(corpora.train, pcfg, poison_rng);
      auto merged = poison::merge_training_set(corpora.train, poison_docs);
      out << "training victim: " << merged.original_count << " clean + "
          << merged.poison_count << " poison samples\n";
      victim = trainer::train(merged.documents, corpora.train.class_count(), data.vocab,
                              data.embeddings, tc, [&](const trainer::EpochLog& log) {
                                out << "  epoch " << log.epoch << "/" << tc.epochs
                                    << "  loss " << log.mean_loss << "  (" << log.seconds
                                    << "s)\n";
                              });
    }

    std::mt19937_64 backdoor_rng(eval::backdoor_stream_seed(seed, trigger));
    const auto backdoor =
        poison::make_backdoor_set(corpora.test, pcfg, cfg.backdoor_count, backdoor_rng);
    const auto encoded_backdoor =
        corpus::encode_all(backdoor.instances, data.vocab, cfg.max_len);

    eval::TrialReport report;
    report.trigger_length = trigger.length();
    report.poisoning_rate = rate;
    report.seed = seed;
    report.test_accuracy = eval::round6(eval::test_accuracy(victim, encoded_test));
    report.attack_success_rate = eval::round6(
        eval::attack_success_rate(victim, encoded_backdoor, pcfg.target_class));
    report.clean_baseline_accuracy = clean_acc;
    report.config_hash = hash;

    const std::string stem = "len" + std::to_string(trigger.length()) + "_rate" +
                             fmt_rate(rate) + "_seed" + std::to_string(seed);
    const fs::path ckpt_path = cfg.output_dir / ("victim_" + stem + ".ckpt");
    guard.track(ckpt_path);
    checkpoint::save(ckpt_path, victim, data.vocab, corpora.train.class_names, tc, hash);
    eval::append_trial_csv(cfg.output_dir / "trials.csv", report);

    if (dump_sets) {
      corpus::Dataset poisoned_view;
      poisoned_view.class_names = corpora.train.class_names;
      poisoned_view.docs = poison::merge_training_set(corpora.train, poison_docs).documents;
      const fs::path ptsv = cfg.output_dir / ("poisoned_train_" + stem + ".tsv");
      guard.track(ptsv);
      corpus::write_corpus_tsv(ptsv, poisoned_view);
      corpus::Dataset backdoor_view;
      backdoor_view.class_names = corpora.train.class_names;
      backdoor_view.docs = backdoor.instances;
      const fs::path btsv = cfg.output_dir / ("backdoor_" + stem + ".tsv");
      guard.track(btsv);
      corpus::write_corpus_tsv(btsv, backdoor_view);
      out << "dumped poisoned/backdoor TSVs\n";
    }
    guard.commit();

    out << "trigger_length=" << report.trigger_length
        << " rate=" << fmt_rate(report.poisoning_rate) << " seed=" << report.seed
        << " test_accuracy=" << fmt_rate(report.test_accuracy)
        << " attack_success_rate=" << fmt_rate(report.attack_success_rate)
        << " clean_baseline_accuracy=" << fmt_rate(report.clean_baseline_accuracy) << "\n";
    out << "wrote " << ckpt_path.string() << "\n";
  });
}

int cmd_matrix(const ExperimentConfig& cfg, std::size_t jobs,
               std::optional<std::uint64_t> seed_opt, std::ostream& out, std::ostream& err) {
  return run_guarded(err, [&] {
    const std::uint64_t base_seed = seed_opt.value_or(cfg.seed);
    auto data = load_prepared(cfg);
    const std::string hash = config_hash(cfg);

    std::vector<eval::CellSpec> cells;
    for (const auto& sentence : cfg.triggers) {
      const auto trigger = poison::TriggerSpec::from_sentence(sentence);
      for (const double rate : cfg.rates) cells.push_back({trigger, rate});
    }

    eval::TrialProtocol proto;
    proto.train = &data.train;
    proto.test = &data.test;
    proto.vocab = &data.vocab;
    proto.embeddings = &data.embeddings;
    proto.train_cfg = train_config_of(cfg, base_seed);
    proto.source_class = data.train.class_index(cfg.source_class);
    proto.target_class = data.train.class_index(cfg.target_class);
    proto.poison_insertion = cfg.poison_insertion;
    proto.backdoor_insertion = cfg.backdoor_insertion;
    proto.backdoor_count = cfg.backdoor_count;
    proto.config_hash = hash;
    proto.jobs = std::max<std::size_t>(1, jobs);
    proto.on_trial = [&](const eval::TrialReport& t) {
      out << "trial done: trigger_length=" << t.trigger_length
          << " rate=" << fmt_rate(t.poisoning_rate) << " seed=" << t.seed
          << " acc=" << fmt_rate(t.test_accuracy)
          << " asr=" << fmt_rate(t.attack_success_rate) << "\n";
    };

    out << "running " << cells.size() << " cells x " << cfg.repeats << " repeats ("
        << cells.size() * cfg.repeats << " trials, jobs=" << proto.jobs << ")\n";
    const auto result = eval::run_trials(cells, cfg.repeats, base_seed, proto);

    fs::create_directories(cfg.output_dir);
    const fs::path trials_path = cfg.output_dir / "trials.csv";
    const fs::path agg_path = cfg.output_dir / "aggregate.csv";
    const fs::path plot_path = cfg.output_dir / "plot_asr.csv";
    eval::write_trial_csv(trials_path, result.trials);
    eval::write_aggregate_csv(agg_path, result.aggregate);
    eval::write_plot_csv(plot_path, result.aggregate);

    // Validate emitted files by parsing them back.
    const auto reread_trials = eval::read_trial_csv(trials_path);
    const auto reread_agg = eval::read_aggregate_csv(agg_path);
    if (reread_trials.size() != result.trials.size() ||
        reread_agg.cells.size() != result.aggregate.cells.size()) {
      throw std::runtime_error("emitted CSV files failed validation");
    }
    out << "wrote " << trials_path.string() << " (" << result.trials.size() << " rows)\n";
    out << "wrote " << agg_path.string() << " (" << result.aggregate.cells.size()
        << " rows)\n";
    out << "wrote " << plot_path.string() << "\n";
  });
}

int cmd_eval_checkpoint(const ExperimentConfig& cfg, const fs::path& ckpt,
                        std::size_t trigger_index, std::optional<std::uint64_t> seed_opt,
                        std::ostream& out, std::ostream& err) {
  return run_guarded(err, [&] {
    const std::uint64_t seed = seed_opt.value_or(cfg.seed);
    auto loaded = checkpoint::load(ckpt);
    const auto trigger = trigger_at(cfg, trigger_index);

    auto test = corpus::load_corpus_tsv(cfg.test_tsv, &loaded.class_names);
    drop_empty_docs(test);
    if (test.docs.empty()) throw InputError("empty test corpus");

    const int source = test.class_index(cfg.source_class);
    const int target = test.class_index(cfg.target_class);
    if (source < 0 || target < 0) {
      throw InputError("source/target class not found in the checkpoint class list");
    }
    poison::PoisonConfig pcfg;
    pcfg.trigger = trigger;
    pcfg.source_class = source;
    pcfg.target_class = target;
    pcfg.rate = 0.0;
    pcfg.backdoor_insertion = cfg.backdoor_insertion;

    const auto encoded_test =
        corpus::encode_all(test.docs, loaded.vocab, loaded.train_cfg.max_len);
    const double acc = eval::round6(eval::test_accuracy(loaded.params, encoded_test));

    std::mt19937_64 backdoor_rng(eval::backdoor_stream_seed(seed, trigger));
    const auto backdoor =
        poison::make_backdoor_set(test, pcfg, cfg.backdoor_count, backdoor_rng);
    const auto encoded_backdoor =
        corpus::encode_all(backdoor.instances, loaded.vocab, loaded.train_cfg.max_len);
    const double asr = eval::round6(
        eval::attack_success_rate(loaded.params, encoded_backdoor, target));

    json j;
    j["checkpoint"] = ckpt.string();
    j["config_hash"] = loaded.config_hash;
    j["trigger_length"] = trigger.length();
    j["seed"] = seed;
    j["test_accuracy"] = acc;
    j["attack_success_rate"] = asr;
    out << j.dump() << "\n";
  });
}

}  // namespace bdlstm::experiment
