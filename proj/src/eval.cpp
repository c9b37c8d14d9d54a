#include "bdlstm/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "bdlstm/errors.hpp"
#include "bdlstm/util.hpp"

namespace bdlstm::eval {

namespace {

constexpr std::uint64_t kPoisonStreamTag = 0x706f69736f6e00ull;    // "poison"
constexpr std::uint64_t kBackdoorStreamTag = 0x6261636b646f6full;  // "backdoo"

// Runs fn(0..n) on up to `jobs` threads; rethrows the first failure.
void parallel_for(std::size_t n, std::size_t jobs,
                  const std::function<void(std::size_t)>& fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex err_mutex;
  std::exception_ptr first_error;
  const auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> threads;
  threads.reserve(jobs);
  for (std::size_t t = 0; t < jobs; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

double fraction_fmt_parse(const std::string& s, const char* what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw InputError(std::string("bad ") + what + " value: '" + s + "'");
  }
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::string fmt(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

void expect_header(std::ifstream& in, const std::string& expected,
                   const std::filesystem::path& path) {
  std::string line;
  if (!std::getline(in, line)) throw InputError("empty CSV file: " + path.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != expected) {
    throw InputError("unexpected CSV header in " + path.string() + ": '" + line + "'");
  }
}

constexpr const char* kTrialHeader =
    "trigger_length,poisoning_rate,seed,test_accuracy,attack_success_rate,"
    "clean_baseline_accuracy,config_hash";
constexpr const char* kAggregateHeader =
    "trigger_length,poisoning_rate,mean_test_accuracy,mean_attack_success_rate,"
    "std_test_accuracy,std_attack_success_rate,repeats";

std::string trial_row(const TrialReport& t) {
  std::ostringstream os;
  os << t.trigger_length << ',' << fmt(t.poisoning_rate, 6) << ',' << t.seed << ','
     << fmt(t.test_accuracy, 6) << ',' << fmt(t.attack_success_rate, 6) << ','
     << fmt(t.clean_baseline_accuracy, 6) << ',' << t.config_hash;
  return os.str();
}

}  // namespace

double test_accuracy(const nn::ModelParams& model,
                     std::span<const corpus::EncodedDocument> test) {
  if (test.empty()) throw InputError("empty evaluation set");
  nn::ForwardTrace trace;
  std::size_t correct = 0;
  for (const auto& doc : test) {
    nn::bilstm_forward(doc, model, trace);
    if (nn::argmax_class(trace.probs) == doc.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

double attack_success_rate(const nn::ModelParams& model,
                           std::span<const corpus::EncodedDocument> backdoor,
                           int target_class) {
  if (backdoor.empty()) throw InputError("empty backdoor set");
  nn::ForwardTrace trace;
  std::size_t hits = 0;
  for (const auto& doc : backdoor) {
    nn::bilstm_forward(doc, model, trace);
    if (nn::argmax_class(trace.probs) == target_class) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(backdoor.size());
}

double round6(double x) { return std::floor(x * 1e6 + 0.5) / 1e6; }

AggregateReport aggregate_trials(std::span<const TrialReport> trials) {
  AggregateReport report;
  std::vector<std::vector<const TrialReport*>> groups;
  for (const auto& t : trials) {
    bool placed = false;
    for (std::size_t g = 0; g < report.cells.size(); ++g) {
      if (report.cells[g].trigger_length == t.trigger_length &&
          report.cells[g].poisoning_rate == t.poisoning_rate) {
        groups[g].push_back(&t);
        placed = true;
        break;
      }
    }
    if (!placed) {
      AggregateCell cell;
      cell.trigger_length = t.trigger_length;
      cell.poisoning_rate = t.poisoning_rate;
      report.cells.push_back(cell);
      groups.push_back({&t});
    }
  }
  for (std::size_t g = 0; g < groups.size(); ++g) {
    auto& cell = report.cells[g];
    const auto& members = groups[g];
    cell.repeats = members.size();
    double acc_sum = 0.0, asr_sum = 0.0;
    for (const TrialReport* t : members) {
      acc_sum += t->test_accuracy;
      asr_sum += t->attack_success_rate;
    }
    const double n = static_cast<double>(members.size());
    cell.mean_test_accuracy = acc_sum / n;
    cell.mean_attack_success_rate = asr_sum / n;
    double acc_var = 0.0, asr_var = 0.0;
    for (const TrialReport* t : members) {
      acc_var += (t->test_accuracy - cell.mean_test_accuracy) *
                 (t->test_accuracy - cell.mean_test_accuracy);
      asr_var += (t->attack_success_rate - cell.mean_attack_success_rate) *
                 (t->attack_success_rate - cell.mean_attack_success_rate);
    }
    cell.std_test_accuracy = std::sqrt(acc_var / n);
    cell.std_attack_success_rate = std::sqrt(asr_var / n);
  }
  return report;
}

std::uint64_t poison_stream_seed(std::uint64_t seed, const poison::TriggerSpec& trigger,
                                 double rate) {
  std::uint64_t rate_bits = 0;
  static_assert(sizeof(rate_bits) == sizeof(rate));
  std::memcpy(&rate_bits, &rate, sizeof(rate));
  return mix_seed(seed, kPoisonStreamTag ^ fnv1a64(trigger.sentence) ^ rate_bits);
}

std::uint64_t backdoor_stream_seed(std::uint64_t seed, const poison::TriggerSpec& trigger) {
  return mix_seed(seed, kBackdoorStreamTag ^ fnv1a64(trigger.sentence));
}

TrialMatrixResult run_trials(std::span<const CellSpec> cells, std::size_t repeats,
                             std::uint64_t base_seed, const TrialProtocol& proto) {
  if (repeats < 1) throw InputError("repeats must be >= 1");
  if (cells.empty()) throw InputError("empty trial matrix");
  if (proto.train == nullptr || proto.test == nullptr || proto.vocab == nullptr ||
      proto.embeddings == nullptr) {
    throw std::invalid_argument("run_trials: protocol datasets not set");
  }

  const auto encoded_test =
      corpus::encode_all(proto.test->docs, *proto.vocab, proto.train_cfg.max_len);

  // One clean baseline per seed, shared by every cell with that seed.
  std::vector<nn::ModelParams> clean_models(repeats);
  std::vector<double> clean_accuracy(repeats, 0.0);
  parallel_for(repeats, proto.jobs, [&](std::size_t r) {
    trainer::TrainConfig cfg = proto.train_cfg;
    cfg.seed = base_seed + r;
    clean_models[r] = trainer::train(proto.train->docs, proto.train->class_count(),
                                     *proto.vocab, *proto.embeddings, cfg);
    clean_accuracy[r] = round6(test_accuracy(clean_models[r], encoded_test));
  });

  const std::size_t n_tasks = cells.size() * repeats;
  std::vector<TrialReport> trials(n_tasks);
  std::mutex progress_mutex;
  parallel_for(n_tasks, proto.jobs, [&](std::size_t task) {
    const std::size_t ci = task / repeats;
    const std::size_t r = task % repeats;
    const std::uint64_t seed = base_seed + r;
    const CellSpec& cell = cells[ci];

    poison::PoisonConfig pcfg;
    pcfg.trigger = cell.trigger;
    pcfg.source_class = proto.source_class;
    pcfg.target_class = proto.target_class;
    pcfg.rate = cell.rate;
    pcfg.poison_insertion = proto.poison_insertion;
    pcfg.backdoor_insertion = proto.backdoor_insertion;

    trainer::TrainConfig cfg = proto.train_cfg;
    cfg.seed = seed;

    TrialReport report;
    report.trigger_length = cell.trigger.length();
    report.poisoning_rate = cell.rate;
    report.seed = seed;
    report.clean_baseline_accuracy = clean_accuracy[r];
    report.config_hash = proto.config_hash;
    try {
      const nn::ModelParams* victim = nullptr;
      nn::ModelParams trained;
      if (poison::poison_count_for(cell.rate, proto.train->docs.size()) == 0) {
        victim = &clean_models[r];
      } else {
        std::mt19937_64 poison_rng(poison_stream_seed(seed, cell.trigger, cell.rate));
        auto poisoned = poison::merge_training_set(
            *proto.train, poison::make_poison_set(*proto.train, pcfg, poison_rng));
        trained = trainer::train(poisoned.documents, proto.train->class_count(),
                                 *proto.vocab, *proto.embeddings, cfg);
        victim = &trained;
      }
      std::mt19937_64 backdoor_rng(backdoor_stream_seed(seed, cell.trigger));
      const auto backdoor =
          poison::make_backdoor_set(*proto.test, pcfg, proto.backdoor_count, backdoor_rng);
      const auto encoded_backdoor =
          corpus::encode_all(backdoor.instances, *proto.vocab, proto.train_cfg.max_len);
      report.test_accuracy = round6(test_accuracy(*victim, encoded_test));
      report.attack_success_rate =
          round6(attack_success_rate(*victim, encoded_backdoor, proto.target_class));
    } catch (const std::exception& e) {
      throw std::runtime_error("trial failed (trigger_length=" +
                               std::to_string(cell.trigger.length()) +
                               ", rate=" + fmt(cell.rate, 6) +
                               ", seed=" + std::to_string(seed) + "): " + e.what());
    }
    trials[task] = report;
    if (proto.on_trial) {
      std::lock_guard<std::mutex> lock(progress_mutex);
      proto.on_trial(report);
    }
  });

  TrialMatrixResult result;
  result.trials = std::move(trials);
  result.aggregate = aggregate_trials(result.trials);
  return result;
}

void write_trial_csv(const std::filesystem::path& path,
                     std::span<const TrialReport> trials) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write trial CSV: " + path.string());
  out << kTrialHeader << '\n';
  for (const auto& t : trials) out << trial_row(t) << '\n';
  if (!out) throw InputError("write failed: " + path.string());
}

void append_trial_csv(const std::filesystem::path& path, const TrialReport& trial) {
  const bool fresh = !std::filesystem::exists(path);
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw InputError("cannot write trial CSV: " + path.string());
  if (fresh) out << kTrialHeader << '\n';
  out << trial_row(trial) << '\n';
  if (!out) throw InputError("write failed: " + path.string());
}

std::vector<TrialReport> read_trial_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open trial CSV: " + path.string());
  expect_header(in, kTrialHeader, path);
  std::vector<TrialReport> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 7) {
      throw InputError("bad trial CSV row in " + path.string() + ": '" + line + "'");
    }
    TrialReport t;
    t.trigger_length = static_cast<std::size_t>(
        fraction_fmt_parse(fields[0], "trigger_length"));
    t.poisoning_rate = fraction_fmt_parse(fields[1], "poisoning_rate");
    t.seed = static_cast<std::uint64_t>(std::stoull(fields[2]));
    t.test_accuracy = fraction_fmt_parse(fields[3], "test_accuracy");
    t.attack_success_rate = fraction_fmt_parse(fields[4], "attack_success_rate");
    t.clean_baseline_accuracy = fraction_fmt_parse(fields[5], "clean_baseline_accuracy");
    t.config_hash = fields[6];
    out.push_back(std::move(t));
  }
  return out;
}

void write_aggregate_csv(const std::filesystem::path& path, const AggregateReport& report) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write aggregate CSV: " + path.string());
  out << kAggregateHeader << '\n';
  for (const auto& c : report.cells) {
    out << c.trigger_length << ',' << fmt(c.poisoning_rate, 6) << ','
        << fmt(c.mean_test_accuracy, 9) << ',' << fmt(c.mean_attack_success_rate, 9) << ','
        << fmt(c.std_test_accuracy, 9) << ',' << fmt(c.std_attack_success_rate, 9) << ','
        << c.repeats << '\n';
  }
  if (!out) throw InputError("write failed: " + path.string());
}

AggregateReport read_aggregate_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open aggregate CSV: " + path.string());
  expect_header(in, kAggregateHeader, path);
  AggregateReport report;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 7) {
      throw InputError("bad aggregate CSV row in " + path.string() + ": '" + line + "'");
    }
    AggregateCell c;
    c.trigger_length =
        static_cast<std::size_t>(fraction_fmt_parse(fields[0], "trigger_length"));
    c.poisoning_rate = fraction_fmt_parse(fields[1], "poisoning_rate");
    c.mean_test_accuracy = fraction_fmt_parse(fields[2], "mean_test_accuracy");
    c.mean_attack_success_rate = fraction_fmt_parse(fields[3], "mean_attack_success_rate");
    c.std_test_accuracy = fraction_fmt_parse(fields[4], "std_test_accuracy");
    c.std_attack_success_rate = fraction_fmt_parse(fields[5], "std_attack_success_rate");
    c.repeats = static_cast<std::size_t>(std::stoull(fields[6]));
    report.cells.push_back(c);
  }
  return report;
}

void write_plot_csv(const std::filesystem::path& path, const AggregateReport& report) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write plot CSV: " + path.string());
  out << "trigger_length,poisoning_rate,mean_attack_success_rate\n";
  for (const auto& c : report.cells) {
    out << c.trigger_length << ',' << fmt(c.poisoning_rate, 6) << ','
        << fmt(c.mean_attack_success_rate, 9) << '\n';
  }
  if (!out) throw InputError("write failed: " + path.string());
}

}  // namespace bdlstm::eval
