#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "touchpred/datamodel.hpp"
#include "touchpred/metrics.hpp"
#include "touchpred/mlp.hpp"

namespace touchpred {

struct TrainConfig {
  int epochs = 10000;
  double learning_rate = 1e-3;
  int eval_every = 50;  // epochs between validation AUROC evaluations
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};  // K = seeds.size()
  ThresholdRule threshold_rule = ThresholdRule::balanced_arithmetic;
  Architecture arch;
  int batch_size = 0;  // 0 = full batch
  int threads = 0;     // 0 = TOUCHPRED_THREADS env or hardware concurrency
};

// Checkpoint with the highest validation AUROC seen during training.
struct TrainedModel {
  NetworkParams params;
  std::uint64_t init_seed = 0;
  int best_epoch = 0;
  double best_val_auroc = 0.0;
  std::vector<double> loss_trace;  // training loss per epoch
};

struct EnsembleModel {
  std::vector<TrainedModel> members;
  double threshold = 0.5;  // tau*, strictly inside (0,1)
  Architecture arch;
  ThresholdRule rule = ThresholdRule::balanced_arithmetic;
};

// Full-batch Adam for config.epochs; keeps the parameterization with maximal
// validation AUROC (ties resolve to the earliest epoch). Deterministic in seed.
TrainedModel train_model(const Dataset& train, const Dataset& val, const TrainConfig& config,
                         std::uint64_t seed);

// K independent runs differing only in seed, then threshold selection on val.
// Members may train concurrently; the result is identical to serial training.
EnsembleModel train_ensemble(const Dataset& train, const Dataset& val, const TrainConfig& config);

double ensemble_predict(const EnsembleModel& ensemble, const Eigen::VectorXd& x);
Eigen::VectorXd ensemble_scores(const EnsembleModel& ensemble, const Eigen::MatrixXd& X);

// tau* maximizing the rule on validation data over midpoint candidates.
double select_threshold(const EnsembleModel& ensemble, const Dataset& val, ThresholdRule rule);

// 1 iff the ensemble score strictly exceeds the stored threshold.
int classify(const EnsembleModel& ensemble, const Eigen::VectorXd& x);

std::string ensemble_to_json_string(const EnsembleModel& ensemble);
EnsembleModel ensemble_from_json_string(const std::string& text);
void save_ensemble(const EnsembleModel& ensemble, const std::filesystem::path& path);
EnsembleModel load_ensemble(const std::filesystem::path& path);

// Thread-count resolution shared by trainer and attribution.
int resolve_threads(int requested);

}  // namespace touchpred
