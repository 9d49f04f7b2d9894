#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace touchpred {

// Classification throughout this module is strict: predict 1 iff score > tau.
struct RocPoint {
  double fpr;
  double tpr;
  double threshold;
};

struct RocCurve {
  std::vector<RocPoint> points;  // FPR/TPR nondecreasing, endpoints (0,0) and (1,1)
};

struct ConfusionCounts {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t tn = 0;
  std::int64_t fn = 0;
};

enum class ThresholdRule {
  balanced_arithmetic,  // (TPR + TNR) / 2
  balanced_geometric,   // sqrt(TPR * TNR)
};

std::string threshold_rule_name(ThresholdRule rule);
ThresholdRule threshold_rule_from_name(const std::string& name);

// One vertex per distinct score (ties grouped). Requires both classes.
RocCurve roc_curve(std::span<const double> scores, std::span<const int> labels);

// Trapezoidal area; equals the Mann-Whitney statistic P(s+ > s-) + P(tie)/2.
double auroc(const RocCurve& curve);
double auroc(std::span<const double> scores, std::span<const int> labels);

ConfusionCounts confusion_at(std::span<const double> scores, std::span<const int> labels,
                             double threshold);

double true_positive_rate(const ConfusionCounts& c);
double true_negative_rate(const ConfusionCounts& c);

// (TPR + TNR) / 2; requires at least one sample of each class.
double balanced_accuracy(const ConfusionCounts& c);

struct ThresholdSelection {
  double threshold = 0.5;
  double objective = 0.0;  // value of the rule at the selected threshold
};

// Candidates are midpoints between consecutive distinct scores plus sentinels
// just below the min and above the max score; ties break toward the smallest
// threshold. For probability-like scores in (0,1) the sentinels stay in (0,1).
ThresholdSelection select_threshold_scores(std::span<const double> scores,
                                           std::span<const int> labels, ThresholdRule rule);

struct MetricsSummary {
  double auroc = 0.0;
  double tpr = 0.0;
  double tnr = 0.0;
  double balanced_accuracy = 0.0;
  double threshold = 0.0;
};

MetricsSummary summarize_at(std::span<const double> scores, std::span<const int> labels,
                            double threshold);

// roc.csv: header threshold,fpr,tpr.
void write_roc_csv(const RocCurve& curve, const std::filesystem::path& path);

// metrics.json: {auroc, tpr, tnr, balanced_accuracy, threshold}.
void write_metrics_json(const MetricsSummary& m, const std::filesystem::path& path);
MetricsSummary read_metrics_json(const std::filesystem::path& path);

}  // namespace touchpred
