#include "touchpred/pipeline.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "touchpred/attribution.hpp"
#include "touchpred/baselines.hpp"
#include "touchpred/datamodel.hpp"
#include "touchpred/metrics.hpp"
#include "touchpred/rng.hpp"
#include "touchpred/synthgen.hpp"
#include "touchpred/trainer.hpp"

namespace touchpred {

namespace {

using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

constexpr std::uint64_t kWindowStream = 0x77696e646f77ULL;      // "window"
constexpr std::uint64_t kSplitStream = 0x73706c6974ULL;         // "split"
constexpr std::uint64_t kMemberStream = 0x6d656d626572ULL;      // "member"
constexpr std::uint64_t kAttributeStream = 0x61747472ULL;       // "attr"
constexpr std::uint64_t kBackgroundStream = 0x6261636b67ULL;    // "backg"

std::uint64_t hash_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot hash missing artifact: " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    const std::streamsize got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "fnv1a64:%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

void write_manifest(const fs::path& out_dir, const std::string& command,
                    const ordered_json& config, const std::vector<std::string>& artifacts) {
  ordered_json doc;
  doc["format"] = "touchpred-manifest-v1";
  doc["command"] = command;
  doc["config"] = config;
  ordered_json hashes;
  for (const std::string& name : artifacts) {
    hashes[name] = hash_hex(hash_file(out_dir / name));
  }
  doc["artifacts"] = std::move(hashes);
  const fs::path path = out_dir / "manifest.json";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << doc.dump(2) << "\n";
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

ordered_json read_json_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path.string());
  return ordered_json::parse(in);
}

// The generate manifest doubles as the data directory's descriptor.
int read_data_horizon(const fs::path& data_dir) {
  const fs::path path = data_dir / "manifest.json";
  if (!fs::exists(path)) {
    throw std::runtime_error("missing " + path.string() +
                             " (data directories are produced by the generate command)");
  }
  const ordered_json doc = read_json_file(path);
  return doc.at("config").at("horizon_days").get<int>();
}

struct ModelBinding {
  EnsembleModel ensemble;
  int lookback_days = 0;
  int horizon_days = 0;
  std::uint64_t seed = 0;
};

ModelBinding load_model(const fs::path& model_dir) {
  const fs::path path = model_dir / "ensemble.json";
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  ModelBinding binding;
  binding.ensemble = ensemble_from_json_string(text);
  const ordered_json doc = ordered_json::parse(text);
  const auto& data = doc.at("data");
  binding.lookback_days = data.at("lookback_days").get<int>();
  binding.horizon_days = data.at("horizon_days").get<int>();
  binding.seed = data.at("seed").get<std::uint64_t>();
  return binding;
}

SplitResult rebuild_split(const std::vector<UserRecord>& records, int lookback_days,
                          int horizon_days, std::uint64_t seed) {
  const Dataset pairs = build_pairs(records, lookback_days, horizon_days,
                                    rng::mix(seed, kWindowStream));
  SplitSpec spec;
  spec.seed = rng::mix(seed, kSplitStream);
  return split(pairs, spec);
}

std::vector<UserRecord> load_data(const fs::path& data_dir) {
  return load_events(data_dir / "events.csv", data_dir / "purchases.csv");
}

std::vector<int> int_labels(const Dataset& data) {
  return std::vector<int>(data.y.begin(), data.y.end());
}

std::vector<double> to_vec(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

MetricsSummary test_summary(const EnsembleModel& ensemble, const Dataset& test) {
  const Eigen::VectorXd scores = ensemble_scores(ensemble, test.feature_matrix());
  return summarize_at(to_vec(scores), int_labels(test), ensemble.threshold);
}

}  // namespace

void run_generate(const GenerateOptions& options) {
  if (options.out_dir.empty()) throw std::invalid_argument("generate: --out is required");
  GeneratorConfig config = scenario_config(options.scenario, options.n_users, options.seed);
  config.horizon_days = horizon_days_for_months(options.months);

  const GeneratedPopulation population = generate(config);
  fs::create_directories(options.out_dir);
  write_events_csv(population.records, options.out_dir / "events.csv",
                   options.out_dir / "purchases.csv");
  write_groundtruth_json(population.truth, options.out_dir / "groundtruth.json");

  ordered_json cfg;
  cfg["scenario"] = options.scenario;
  cfg["n_users"] = options.n_users;
  cfg["months"] = options.months;
  cfg["horizon_days"] = config.horizon_days;
  cfg["seed"] = options.seed;
  cfg["target_buyer_rate"] = config.target_buyer_rate;
  cfg["realized_buyer_rate"] = population.truth.realized_buyer_rate;
  write_manifest(options.out_dir, "generate", cfg,
                 {"events.csv", "purchases.csv", "groundtruth.json"});
}

void run_train(const TrainOptions& options) {
  if (options.out_dir.empty()) throw std::invalid_argument("train: --out is required");
  const int horizon_days = read_data_horizon(options.data_dir);
  const int lookback_days = lookback_days_for_preset(options.lookback, horizon_days);

  TrainConfig config;
  if (options.profile == "desk") {
    // The short budget leans on mini-batch steps: with a few hundred epochs,
    // full-batch Adam is still crawling out of the saturated regime that raw
    // count features put the first layer in, while 256-row batches take
    // enough steps per epoch to converge within the budget.
    config.epochs = 500;
    config.seeds.resize(5);
    config.batch_size = 256;
  } else if (options.profile == "paper") {
    config.epochs = 10000;
    config.seeds.resize(10);
  } else {
    throw std::invalid_argument("train: unknown profile '" + options.profile +
                                "' (expected desk or paper)");
  }
  if (options.epochs_override > 0) config.epochs = options.epochs_override;
  if (options.members_override > 0) config.seeds.resize(options.members_override);
  for (std::size_t k = 0; k < config.seeds.size(); ++k) {
    config.seeds[k] = rng::mix(rng::mix(options.seed, kMemberStream), k);
  }
  if (options.rule == "arithmetic") {
    config.threshold_rule = ThresholdRule::balanced_arithmetic;
  } else if (options.rule == "geometric") {
    config.threshold_rule = ThresholdRule::balanced_geometric;
  } else {
    throw std::invalid_argument("train: unknown rule '" + options.rule +
                                "' (expected arithmetic or geometric)");
  }
  config.threads = options.threads;

  const std::vector<UserRecord> records = load_data(options.data_dir);
  const SplitResult splits = rebuild_split(records, lookback_days, horizon_days, options.seed);
  const EnsembleModel ensemble = train_ensemble(splits.train, splits.val, config);

  fs::create_directories(options.out_dir);

  // ensemble.json carries its data binding so downstream stages can rebuild
  // the exact split without re-passing flags.
  ordered_json doc = ordered_json::parse(ensemble_to_json_string(ensemble));
  doc["data"] = {{"lookback_days", lookback_days},
                 {"horizon_days", horizon_days},
                 {"seed", options.seed}};
  {
    const fs::path path = options.out_dir / "ensemble.json";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    out << doc.dump(2) << "\n";
    if (!out) throw std::runtime_error("write failed: " + path.string());
  }
  write_metrics_json(test_summary(ensemble, splits.test), options.out_dir / "metrics.json");

  ordered_json cfg;
  cfg["data"] = options.data_dir.string();
  cfg["lookback"] = options.lookback;
  cfg["lookback_days"] = lookback_days;
  cfg["horizon_days"] = horizon_days;
  cfg["profile"] = options.profile;
  cfg["epochs"] = config.epochs;
  cfg["members"] = config.seeds.size();
  cfg["rule"] = options.rule;
  cfg["seed"] = options.seed;
  write_manifest(options.out_dir, "train", cfg, {"ensemble.json", "metrics.json"});
}

void run_evaluate(const EvaluateOptions& options) {
  if (options.out_dir.empty()) throw std::invalid_argument("evaluate: --out is required");
  const ModelBinding binding = load_model(options.model_dir);
  const std::vector<UserRecord> records = load_data(options.data_dir);
  const SplitResult splits =
      rebuild_split(records, binding.lookback_days, binding.horizon_days, binding.seed);

  fs::create_directories(options.out_dir);
  write_metrics_json(test_summary(binding.ensemble, splits.test),
                     options.out_dir / "metrics.json");

  ordered_json cfg;
  cfg["data"] = options.data_dir.string();
  cfg["model"] = options.model_dir.string();
  cfg["lookback_days"] = binding.lookback_days;
  cfg["seed"] = binding.seed;
  write_manifest(options.out_dir, "evaluate", cfg, {"metrics.json"});
}

void run_compare(const CompareOptions& options) {
  if (options.out_dir.empty()) throw std::invalid_argument("compare: --out is required");
  std::vector<std::string> keep = {"ensemble"};
  {
    std::stringstream ss(options.baselines);
    std::string token;
    while (std::getline(ss, token, ',')) {
      if (token == "logistic") {
        keep.push_back("logistic");
      } else if (token == "nb" || token == "naive_bayes") {
        keep.push_back("naive_bayes");
      } else if (token == "knn") {
        keep.push_back("knn");
      } else if (!token.empty()) {
        throw std::invalid_argument("compare: unknown baseline '" + token +
                                    "' (expected logistic, nb, knn)");
      }
    }
  }

  const ModelBinding binding = load_model(options.model_dir);
  const std::vector<UserRecord> records = load_data(options.data_dir);
  const SplitResult splits =
      rebuild_split(records, binding.lookback_days, binding.horizon_days, binding.seed);

  const std::vector<ComparisonRow> all = compare_models(
      binding.ensemble, splits.train, splits.val, splits.test, binding.ensemble.rule);
  std::vector<ComparisonRow> rows;
  for (const ComparisonRow& row : all) {
    if (std::find(keep.begin(), keep.end(), row.model) != keep.end()) rows.push_back(row);
  }

  fs::create_directories(options.out_dir);
  write_comparison_csv(rows, options.out_dir / "comparison.csv");

  ordered_json cfg;
  cfg["data"] = options.data_dir.string();
  cfg["model"] = options.model_dir.string();
  cfg["baselines"] = options.baselines;
  cfg["seed"] = binding.seed;
  write_manifest(options.out_dir, "compare", cfg, {"comparison.csv"});
}

void run_attribute(const AttributeOptions& options) {
  if (options.out_dir.empty()) throw std::invalid_argument("attribute: --out is required");
  if (options.rows < 1) throw std::invalid_argument("attribute: --rows must be >= 1");
  const ModelBinding binding = load_model(options.model_dir);
  const std::vector<UserRecord> records = load_data(options.data_dir);
  const SplitResult splits =
      rebuild_split(records, binding.lookback_days, binding.horizon_days, binding.seed);

  Dataset subset = splits.test;
  if (static_cast<std::size_t>(options.rows) < subset.size()) {
    subset.x.resize(static_cast<std::size_t>(options.rows));
    subset.y.resize(static_cast<std::size_t>(options.rows));
    subset.user_ids.resize(static_cast<std::size_t>(options.rows));
  }

  const Eigen::MatrixXd background = sample_background(
      splits.train, options.background, rng::mix(binding.seed, kBackgroundStream));
  AttributionConfig config;
  config.n_perm = options.n_perm;
  config.seed = rng::mix(binding.seed, kAttributeStream);
  config.threads = options.threads;
  const ShapleyMatrix matrix =
      attribute_dataset(binding.ensemble, subset, background, config);

  fs::create_directories(options.out_dir);
  write_importance_csv(rank_features(matrix), options.out_dir / "importance.csv");
  export_beeswarm(matrix, subset, options.out_dir / "beeswarm.csv");

  ordered_json cfg;
  cfg["data"] = options.data_dir.string();
  cfg["model"] = options.model_dir.string();
  cfg["rows"] = subset.size();
  cfg["background"] = options.background;
  cfg["n_perm"] = options.n_perm;
  cfg["seed"] = binding.seed;
  write_manifest(options.out_dir, "attribute", cfg, {"importance.csv", "beeswarm.csv"});
}

void run_roc_export(const RocExportOptions& options) {
  if (options.out_dir.empty()) throw std::invalid_argument("roc-export: --out is required");
  const ModelBinding binding = load_model(options.model_dir);
  const std::vector<UserRecord> records = load_data(options.data_dir);
  const SplitResult splits =
      rebuild_split(records, binding.lookback_days, binding.horizon_days, binding.seed);

  const Eigen::VectorXd scores = ensemble_scores(binding.ensemble, splits.test.feature_matrix());
  const RocCurve curve = roc_curve(to_vec(scores), int_labels(splits.test));

  fs::create_directories(options.out_dir);
  write_roc_csv(curve, options.out_dir / "roc.csv");
  write_metrics_json(summarize_at(to_vec(scores), int_labels(splits.test),
                                  binding.ensemble.threshold),
                     options.out_dir / "metrics.json");

  ordered_json cfg;
  cfg["data"] = options.data_dir.string();
  cfg["model"] = options.model_dir.string();
  cfg["seed"] = binding.seed;
  write_manifest(options.out_dir, "roc-export", cfg, {"roc.csv", "metrics.json"});
}

}  // namespace touchpred
