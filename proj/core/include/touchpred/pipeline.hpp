#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

namespace touchpred {

// File-based pipeline stages behind the CLI: each stage reads its inputs
// from a directory, writes its artifacts plus a manifest.json (config,
// seeds, fnv1a64 artifact hashes) into --out, and is deterministic in its
// options. Artifact formats are owned by the producing modules.

struct GenerateOptions {
  std::string scenario = "default";  // default | interaction | decay
  int n_users = 20556;
  double months = 40.0;  // horizon = round(months * 30.4) days
  std::uint64_t seed = 0;
  std::filesystem::path out_dir;
};

// events.csv, purchases.csv, groundtruth.json, manifest.json.
void run_generate(const GenerateOptions& options);

struct TrainOptions {
  std::filesystem::path data_dir;  // a generate output directory
  std::filesystem::path out_dir;
  std::string lookback = "full";     // 1m | 3m | 12m | full
  std::string profile = "desk";      // desk (500 epochs, K=5) | paper (10000 epochs, K=10)
  std::string rule = "arithmetic";   // arithmetic | geometric balanced accuracy
  std::uint64_t seed = 0;            // drives windows, the split, and member seeds
  int epochs_override = 0;           // 0 = profile default
  int members_override = 0;          // 0 = profile default
  int threads = 0;
};

// ensemble.json (with its data binding: lookback, horizon, seed) and
// metrics.json evaluated on the held-out test split.
void run_train(const TrainOptions& options);

struct EvaluateOptions {
  std::filesystem::path data_dir;
  std::filesystem::path model_dir;  // a train output directory
  std::filesystem::path out_dir;
};

// metrics.json on the test split reconstructed from the model's binding.
void run_evaluate(const EvaluateOptions& options);

struct CompareOptions {
  std::filesystem::path data_dir;
  std::filesystem::path model_dir;
  std::filesystem::path out_dir;
  std::string baselines = "logistic,nb,knn";  // subset to include
};

// comparison.csv: the ensemble row plus one row per selected baseline.
void run_compare(const CompareOptions& options);

struct AttributeOptions {
  std::filesystem::path data_dir;
  std::filesystem::path model_dir;
  std::filesystem::path out_dir;
  int rows = 200;        // first N test rows to attribute
  int background = 512;  // background sample size from the training split
  int n_perm = 200;
  int threads = 0;
};

// importance.csv and beeswarm.csv over the attributed test rows.
void run_attribute(const AttributeOptions& options);

struct RocExportOptions {
  std::filesystem::path data_dir;
  std::filesystem::path model_dir;
  std::filesystem::path out_dir;
};

// roc.csv plus metrics.json for the ensemble on the test split.
void run_roc_export(const RocExportOptions& options);

}  // namespace touchpred
