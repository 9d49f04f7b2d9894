#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "touchpred/datamodel.hpp"
#include "touchpred/trainer.hpp"

namespace touchpred {

// Batched scoring function: one row per candidate input, returns one score
// per row. Must be safe to call concurrently from multiple threads.
using BatchScoreFn = std::function<Eigen::VectorXd(const Eigen::MatrixXd&)>;

// Shapley value functions use marginal (interventional) masking: v(S) is the
// mean over background rows of f applied to x with the features outside S
// replaced by the background row's values.

// Reference sample defining "feature absent". B x d matrix, one row per
// background vector.
Eigen::MatrixXd sample_background(const Dataset& train, int size, std::uint64_t seed);

inline constexpr int kExactShapleyMaxDims = 14;

// Exact Shapley values over active_dims (0-based feature positions); other
// features stay fixed at x's values in every evaluation. Cost is
// 2^|active_dims| value-function evaluations; dimensions above
// kExactShapleyMaxDims are rejected (use shapley_permutation instead).
// Result is aligned with active_dims.
std::vector<double> shapley_exact(const BatchScoreFn& f, const Eigen::VectorXd& x,
                                  const Eigen::MatrixXd& background,
                                  const std::vector<int>& active_dims);

// Monte Carlo permutation estimate over all features of x. Permutations are
// processed in antithetic pairs (a permutation and its reverse share one
// background draw), so n_perm is rounded up to an even count. Deterministic
// in seed. A feature the model ignores gets exactly zero (not just in
// expectation): every marginal difference for it compares identical rows.
Eigen::VectorXd shapley_permutation(const BatchScoreFn& f, const Eigen::VectorXd& x,
                                    const Eigen::MatrixXd& background, int n_perm,
                                    std::uint64_t seed);

struct AttributionConfig {
  int n_perm = 200;
  std::uint64_t seed = 0;
  int threads = 0;  // 0 = TOUCHPRED_THREADS env or hardware concurrency
};

struct ShapleyMatrix {
  Eigen::MatrixXd values;   // n_rows x 31, phi per (user, touchpoint code)
  double base_value = 0.0;  // mean ensemble score over the background
};

// One Shapley row per dataset row against the ensemble score; row i's
// randomness derives from (config.seed, i), so parallel and serial runs
// agree exactly.
ShapleyMatrix attribute_dataset(const EnsembleModel& ensemble, const Dataset& data,
                                const Eigen::MatrixXd& background,
                                const AttributionConfig& config);

struct RankedFeature {
  int code = 0;
  std::string name;
  double mean_abs_phi = 0.0;
};

// Descending by mean |phi| (equivalently the sum); ties toward lower code.
std::vector<RankedFeature> rank_features(const ShapleyMatrix& matrix);

// beeswarm.csv: header user_idx,code,feature_name,count,phi; one row per
// (user, feature), features grouped in rank_features order.
void export_beeswarm(const ShapleyMatrix& matrix, const Dataset& data,
                     const std::filesystem::path& path);

// importance.csv: header rank,code,feature_name,mean_abs_phi.
void write_importance_csv(const std::vector<RankedFeature>& ranking,
                          const std::filesystem::path& path);

}  // namespace touchpred
