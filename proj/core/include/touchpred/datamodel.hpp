#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "touchpred/touchpoints.hpp"

namespace touchpred {

// One marketing interaction. Day offsets count from the start of the
// collection window (day 0).
struct TouchpointEvent {
  std::int32_t t_day;
  std::int32_t code;  // 1..31
};

struct UserRecord {
  std::string user_id;
  std::vector<TouchpointEvent> events;  // sorted by (t_day, code)
  std::optional<std::int32_t> purchase_day;

  int label() const { return purchase_day.has_value() ? 1 : 0; }
};

// Lookback-window count vector, index i holds the count for code i+1.
using TouchpointVector = std::array<std::int64_t, kNumTouchpoints>;

struct Dataset {
  std::vector<TouchpointVector> x;
  std::vector<std::int8_t> y;
  std::vector<std::string> user_ids;  // aligned with x/y
  int lookback_days = 0;

  std::size_t size() const { return x.size(); }
  bool empty() const { return x.empty(); }

  // Dense views for the numeric code paths.
  Eigen::MatrixXd feature_matrix() const;
  Eigen::VectorXd label_vector() const;
};

struct SplitSpec {
  double train_frac = 0.8;
  double val_frac = 0.1;
  double test_frac = 0.1;
  std::uint64_t seed = 0;
};

struct SplitResult {
  Dataset train;
  Dataset val;
  Dataset test;
};

struct ClassSummary {
  std::int64_t n_pos = 0;
  std::int64_t n_neg = 0;
  double positive_rate = 0.0;
};

// 40 months at 30.4 days/month.
inline constexpr int kDefaultHorizonDays = 1216;

int horizon_days_for_months(double months);

// Presets: "1m" = 30, "3m" = 91, "12m" = 365, "full" = horizon.
int lookback_days_for_preset(const std::string& preset, int horizon_days);

// Reads the events/purchases CSV pair. One record per distinct user id;
// events sorted ascending by day; events after a user's first purchase are
// dropped. Throws std::runtime_error with the offending line number on
// malformed rows and on duplicate purchase rows.
std::vector<UserRecord> load_events(const std::filesystem::path& events_csv,
                                    const std::filesystem::path& purchases_csv);

void write_events_csv(const std::vector<UserRecord>& records,
                      const std::filesystem::path& events_csv,
                      const std::filesystem::path& purchases_csv);

// Builds lookback count vectors. Buyers aggregate [purchase_day - T,
// purchase_day]; non-buyers aggregate a window whose start is uniform on
// [0, horizon - T], drawn from (seed, user_id). Users with an all-zero
// window are excluded.
Dataset build_pairs(const std::vector<UserRecord>& records, int lookback_days,
                    int horizon_days, std::uint64_t seed);

// Disjoint, exhaustive 80/10/10 partition; val and test get floor(frac*N)
// rows each and the remainder goes to train. Deterministic in spec.seed.
SplitResult split(const Dataset& dataset, const SplitSpec& spec);

ClassSummary class_summary(const Dataset& dataset);

// Aggregated export: header user_id,y,x1,...,x31.
void write_dataset_csv(const Dataset& dataset, const std::filesystem::path& path);

}  // namespace touchpred
