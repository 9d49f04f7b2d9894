#include "touchpred/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numeric>
#include <stdexcept>

#include "text_io.hpp"

namespace touchpred {

namespace {

struct ClassTotals {
  std::int64_t pos = 0;
  std::int64_t neg = 0;
};

ClassTotals count_classes(std::span<const int> labels) {
  ClassTotals t;
  for (int label : labels) {
    if (label) {
      ++t.pos;
    } else {
      ++t.neg;
    }
  }
  return t;
}

void check_inputs(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw std::invalid_argument("scores and labels must have equal length");
  }
  if (scores.empty()) throw std::invalid_argument("empty score list");
}

// Distinct scores in descending order with per-group positive/negative counts.
struct ScoreGroups {
  std::vector<double> score;
  std::vector<std::int64_t> pos;
  std::vector<std::int64_t> neg;
};

ScoreGroups group_by_score(std::span<const double> scores, std::span<const int> labels) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  ScoreGroups g;
  for (std::size_t k : order) {
    if (g.score.empty() || scores[k] != g.score.back()) {
      g.score.push_back(scores[k]);
      g.pos.push_back(0);
      g.neg.push_back(0);
    }
    if (labels[k]) {
      ++g.pos.back();
    } else {
      ++g.neg.back();
    }
  }
  return g;
}

double below_min_sentinel(double min_score) {
  return min_score > 0.0 ? 0.5 * min_score : min_score - 0.5;
}

double above_max_sentinel(double max_score) {
  return max_score < 1.0 ? 0.5 * (max_score + 1.0) : max_score + 0.5;
}

}  // namespace

std::string threshold_rule_name(ThresholdRule rule) {
  return rule == ThresholdRule::balanced_arithmetic ? "balanced_arithmetic" : "balanced_geometric";
}

ThresholdRule threshold_rule_from_name(const std::string& name) {
  if (name == "balanced_arithmetic") return ThresholdRule::balanced_arithmetic;
  if (name == "balanced_geometric") return ThresholdRule::balanced_geometric;
  throw std::invalid_argument("unknown threshold rule '" + name + "'");
}

RocCurve roc_curve(std::span<const double> scores, std::span<const int> labels) {
  check_inputs(scores, labels);
  const ClassTotals totals = count_classes(labels);
  if (totals.pos == 0 || totals.neg == 0) {
    throw std::invalid_argument("roc_curve requires both classes");
  }

  const ScoreGroups g = group_by_score(scores, labels);
  RocCurve curve;
  curve.points.reserve(g.score.size() + 1);
  // tau = max score: nothing scores strictly above it.
  curve.points.push_back({0.0, 0.0, g.score.front()});
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  for (std::size_t k = 0; k < g.score.size(); ++k) {
    tp += g.pos[k];
    fp += g.neg[k];
    const double tau =
        k + 1 < g.score.size() ? g.score[k + 1] : below_min_sentinel(g.score.back());
    curve.points.push_back({static_cast<double>(fp) / static_cast<double>(totals.neg),
                            static_cast<double>(tp) / static_cast<double>(totals.pos), tau});
  }
  return curve;
}

double auroc(const RocCurve& curve) {
  double area = 0.0;
  for (std::size_t k = 0; k + 1 < curve.points.size(); ++k) {
    const RocPoint& a = curve.points[k];
    const RocPoint& b = curve.points[k + 1];
    area += (b.fpr - a.fpr) * 0.5 * (a.tpr + b.tpr);
  }
  return area;
}

double auroc(std::span<const double> scores, std::span<const int> labels) {
  return auroc(roc_curve(scores, labels));
}

ConfusionCounts confusion_at(std::span<const double> scores, std::span<const int> labels,
                             double threshold) {
  check_inputs(scores, labels);
  ConfusionCounts c;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] > threshold;
    if (labels[i]) {
      predicted ? ++c.tp : ++c.fn;
    } else {
      predicted ? ++c.fp : ++c.tn;
    }
  }
  return c;
}

double true_positive_rate(const ConfusionCounts& c) {
  if (c.tp + c.fn == 0) throw std::invalid_argument("TPR undefined without positives");
  return static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
}

double true_negative_rate(const ConfusionCounts& c) {
  if (c.tn + c.fp == 0) throw std::invalid_argument("TNR undefined without negatives");
  return static_cast<double>(c.tn) / static_cast<double>(c.tn + c.fp);
}

double balanced_accuracy(const ConfusionCounts& c) {
  return 0.5 * (true_positive_rate(c) + true_negative_rate(c));
}

ThresholdSelection select_threshold_scores(std::span<const double> scores,
                                           std::span<const int> labels, ThresholdRule rule) {
  check_inputs(scores, labels);
  const ClassTotals totals = count_classes(labels);
  if (totals.pos == 0 || totals.neg == 0) {
    throw std::invalid_argument("threshold selection requires both classes");
  }

  const ScoreGroups g = group_by_score(scores, labels);
  const std::size_t m = g.score.size();

  // Candidate k classifies everything with score >= g.score[k] as positive
  // (k = m means nothing positive). Walk candidates from the smallest
  // threshold upward so ties keep the smallest.
  auto objective = [&](std::int64_t tp, std::int64_t fp) {
    const double tpr = static_cast<double>(tp) / static_cast<double>(totals.pos);
    const double tnr = static_cast<double>(totals.neg - fp) / static_cast<double>(totals.neg);
    return rule == ThresholdRule::balanced_arithmetic ? 0.5 * (tpr + tnr) : std::sqrt(tpr * tnr);
  };
  auto candidate_threshold = [&](std::size_t k) {
    if (k == 0) return below_min_sentinel(g.score.back());
    if (k == m) return above_max_sentinel(g.score.front());
    // midpoint between the k-th and (k-1)-th smallest distinct scores
    return 0.5 * (g.score[m - k] + g.score[m - k - 1]);
  };

  // Cumulative counts from the bottom: after dropping the k smallest groups.
  std::int64_t tp = totals.pos;
  std::int64_t fp = totals.neg;
  ThresholdSelection best{candidate_threshold(0), objective(tp, fp)};
  for (std::size_t k = 1; k <= m; ++k) {
    const std::size_t group = m - k;  // group leaving the positive side
    tp -= g.pos[group];
    fp -= g.neg[group];
    const double obj = objective(tp, fp);
    if (obj > best.objective) {
      best.threshold = candidate_threshold(k);
      best.objective = obj;
    }
  }
  return best;
}

MetricsSummary summarize_at(std::span<const double> scores, std::span<const int> labels,
                            double threshold) {
  MetricsSummary m;
  m.auroc = auroc(scores, labels);
  const ConfusionCounts c = confusion_at(scores, labels, threshold);
  m.tpr = true_positive_rate(c);
  m.tnr = true_negative_rate(c);
  m.balanced_accuracy = 0.5 * (m.tpr + m.tnr);
  m.threshold = threshold;
  return m;
}

void write_roc_csv(const RocCurve& curve, const std::filesystem::path& path) {
  detail::CsvWriter out(path);
  std::string& buf = out.buffer();
  buf += "threshold,fpr,tpr\n";
  for (const RocPoint& p : curve.points) {
    detail::append_double(buf, p.threshold);
    buf += ',';
    detail::append_double(buf, p.fpr);
    buf += ',';
    detail::append_double(buf, p.tpr);
    buf += '\n';
    out.maybe_flush();
  }
}

void write_metrics_json(const MetricsSummary& m, const std::filesystem::path& path) {
  nlohmann::ordered_json j;
  j["auroc"] = m.auroc;
  j["tpr"] = m.tpr;
  j["tnr"] = m.tnr;
  j["balanced_accuracy"] = m.balanced_accuracy;
  j["threshold"] = m.threshold;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << j.dump(2) << '\n';
}

MetricsSummary read_metrics_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path.string());
  nlohmann::json j;
  in >> j;
  MetricsSummary m;
  m.auroc = j.at("auroc").get<double>();
  m.tpr = j.at("tpr").get<double>();
  m.tnr = j.at("tnr").get<double>();
  m.balanced_accuracy = j.at("balanced_accuracy").get<double>();
  m.threshold = j.at("threshold").get<double>();
  return m;
}

}  // namespace touchpred
