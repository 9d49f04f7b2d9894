#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "touchpred/datamodel.hpp"
#include "touchpred/metrics.hpp"
#include "touchpred/trainer.hpp"

namespace touchpred {

// L2-penalized logistic regression, fit with full-batch Adam on z-scored
// features and unfolded back to raw feature space.
struct LogisticConfig {
  int epochs = 2000;
  double learning_rate = 1e-2;
  double l2 = -1.0;  // penalty on standardized weights; negative = 1/n_train
};

struct LogisticModel {
  Eigen::VectorXd weights;  // raw-space
  double bias = 0.0;

  double predict(const Eigen::VectorXd& x) const;
  Eigen::VectorXd scores(const Eigen::MatrixXd& X) const;
};

LogisticModel fit_logistic(const Dataset& train, const LogisticConfig& config = {});

// Gaussian naive Bayes with a shared variance floor so constant features
// cannot produce infinite densities. Optionally fits on log1p-transformed
// counts, which softens the heavy right tail of touchpoint volumes.
struct GaussianNBModel {
  Eigen::VectorXd mean_pos;
  Eigen::VectorXd var_pos;
  Eigen::VectorXd mean_neg;
  Eigen::VectorXd var_neg;
  double log_prior_pos = 0.0;
  double log_prior_neg = 0.0;
  bool log1p_features = false;

  double predict(const Eigen::VectorXd& x) const;  // posterior P(y=1 | x)
  Eigen::VectorXd scores(const Eigen::MatrixXd& X) const;
};

GaussianNBModel fit_gaussian_nb(const Dataset& train, bool log1p_features = false);

// k-nearest-neighbours vote on z-scored Euclidean distance; distance ties
// resolve toward the lower training-row index. Score = positive fraction
// among the k neighbours.
struct KnnModel {
  int k = 5;
  Eigen::MatrixXd train_features;  // standardized
  Eigen::VectorXd feature_mean;
  Eigen::VectorXd feature_scale;
  std::vector<std::int8_t> labels;

  double predict(const Eigen::VectorXd& x) const;
  Eigen::VectorXd scores(const Eigen::MatrixXd& X) const;
};

KnnModel fit_knn(const Dataset& train, int k = 5);

struct ComparisonRow {
  std::string model;  // "ensemble", "logistic", "naive_bayes", "knn"
  MetricsSummary metrics;
};

// Fits the three baselines on train, selects each model's threshold on val
// with the given rule, and reports test AUROC plus test TPR/TNR/balanced
// accuracy at that threshold. The ensemble row re-selects its threshold on
// val with the same rule so all four rows are comparable.
std::vector<ComparisonRow> compare_models(const EnsembleModel& ensemble, const Dataset& train,
                                          const Dataset& val, const Dataset& test,
                                          ThresholdRule rule);

// comparison.csv: header model,auroc,tpr,tnr,balanced_accuracy.
void write_comparison_csv(const std::vector<ComparisonRow>& rows,
                          const std::filesystem::path& path);

}  // namespace touchpred
