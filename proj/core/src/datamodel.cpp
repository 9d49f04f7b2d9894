#include "touchpred/datamodel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

#include "text_io.hpp"
#include "touchpred/rng.hpp"

namespace touchpred {

Eigen::MatrixXd Dataset::feature_matrix() const {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(x.size()), kNumTouchpoints);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < kNumTouchpoints; ++j) {
      m(i, j) = static_cast<double>(x[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
    }
  }
  return m;
}

Eigen::VectorXd Dataset::label_vector() const {
  Eigen::VectorXd v(static_cast<Eigen::Index>(y.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = static_cast<double>(y[static_cast<std::size_t>(i)]);
  return v;
}

int horizon_days_for_months(double months) {
  if (!(months > 0)) throw std::invalid_argument("months must be positive");
  return static_cast<int>(std::llround(months * 30.4));
}

int lookback_days_for_preset(const std::string& preset, int horizon_days) {
  if (preset == "1m") return 30;
  if (preset == "3m") return 91;
  if (preset == "12m") return 365;
  if (preset == "full") return horizon_days;
  throw std::invalid_argument("unknown lookback preset '" + preset + "' (expected 1m|3m|12m|full)");
}

std::vector<UserRecord> load_events(const std::filesystem::path& events_csv,
                                    const std::filesystem::path& purchases_csv) {
  std::unordered_map<std::string, std::size_t> index;
  std::vector<UserRecord> records;

  auto record_for = [&](std::string_view user_id) -> UserRecord& {
    auto it = index.find(std::string(user_id));
    if (it == index.end()) {
      it = index.emplace(std::string(user_id), records.size()).first;
      records.push_back(UserRecord{std::string(user_id), {}, std::nullopt});
    }
    return records[it->second];
  };

  detail::for_each_csv_row(events_csv, "user_id,t_day,code", [&](std::size_t line_no, std::string_view line) {
    const auto fields = detail::split_fields(line);
    if (fields.size() != 3) {
      throw std::runtime_error(events_csv.string() + ":" + std::to_string(line_no) +
                               ": expected 3 fields, got " + std::to_string(fields.size()));
    }
    const auto day = detail::parse_int_field<std::int32_t>(fields[1], events_csv.string(), line_no, "t_day");
    const auto code = detail::parse_int_field<std::int32_t>(fields[2], events_csv.string(), line_no, "code");
    if (day < 0) {
      throw std::runtime_error(events_csv.string() + ":" + std::to_string(line_no) + ": negative t_day");
    }
    if (code < 1 || code > kNumTouchpoints) {
      throw std::runtime_error(events_csv.string() + ":" + std::to_string(line_no) + ": code out of range");
    }
    record_for(fields[0]).events.push_back(TouchpointEvent{day, code});
  });

  detail::for_each_csv_row(purchases_csv, "user_id,t_day", [&](std::size_t line_no, std::string_view line) {
    const auto fields = detail::split_fields(line);
    if (fields.size() != 2) {
      throw std::runtime_error(purchases_csv.string() + ":" + std::to_string(line_no) +
                               ": expected 2 fields, got " + std::to_string(fields.size()));
    }
    const auto day = detail::parse_int_field<std::int32_t>(fields[1], purchases_csv.string(), line_no, "t_day");
    if (day < 0) {
      throw std::runtime_error(purchases_csv.string() + ":" + std::to_string(line_no) + ": negative t_day");
    }
    UserRecord& rec = record_for(fields[0]);
    if (rec.purchase_day.has_value()) {
      throw std::runtime_error(purchases_csv.string() + ":" + std::to_string(line_no) +
                               ": duplicate purchase row for user '" + std::string(fields[0]) + "'");
    }
    rec.purchase_day = day;
  });

  for (UserRecord& rec : records) {
    if (rec.purchase_day.has_value()) {
      const std::int32_t cutoff = *rec.purchase_day;
      std::erase_if(rec.events, [cutoff](const TouchpointEvent& e) { return e.t_day > cutoff; });
    }
    std::sort(rec.events.begin(), rec.events.end(), [](const TouchpointEvent& a, const TouchpointEvent& b) {
      return a.t_day != b.t_day ? a.t_day < b.t_day : a.code < b.code;
    });
  }
  return records;
}

void write_events_csv(const std::vector<UserRecord>& records,
                      const std::filesystem::path& events_csv,
                      const std::filesystem::path& purchases_csv) {
  detail::CsvWriter events(events_csv);
  events.buffer() += "user_id,t_day,code\n";
  detail::CsvWriter purchases(purchases_csv);
  purchases.buffer() += "user_id,t_day\n";
  for (const UserRecord& rec : records) {
    for (const TouchpointEvent& e : rec.events) {
      std::string& buf = events.buffer();
      buf += rec.user_id;
      buf += ',';
      detail::append_int(buf, e.t_day);
      buf += ',';
      detail::append_int(buf, e.code);
      buf += '\n';
      events.maybe_flush();
    }
    if (rec.purchase_day.has_value()) {
      std::string& buf = purchases.buffer();
      buf += rec.user_id;
      buf += ',';
      detail::append_int(buf, *rec.purchase_day);
      buf += '\n';
      purchases.maybe_flush();
    }
  }
}

Dataset build_pairs(const std::vector<UserRecord>& records, int lookback_days, int horizon_days,
                    std::uint64_t seed) {
  if (lookback_days <= 0) throw std::invalid_argument("lookback_days must be positive");
  if (lookback_days > horizon_days) {
    throw std::invalid_argument("lookback_days exceeds the collection horizon");
  }

  Dataset ds;
  ds.lookback_days = lookback_days;
  ds.x.reserve(records.size());
  ds.y.reserve(records.size());
  ds.user_ids.reserve(records.size());

  for (const UserRecord& rec : records) {
    std::int64_t win_lo;
    std::int64_t win_hi;
    if (rec.purchase_day.has_value()) {
      win_hi = *rec.purchase_day;
      win_lo = win_hi - lookback_days;
    } else {
      rng::Engine eng = rng::Engine::streamed(seed, rng::fnv1a64(rec.user_id));
      win_lo = static_cast<std::int64_t>(eng.below(static_cast<std::uint64_t>(horizon_days - lookback_days + 1)));
      win_hi = win_lo + lookback_days;
    }

    TouchpointVector counts{};
    bool any = false;
    for (const TouchpointEvent& e : rec.events) {
      if (e.t_day >= win_lo && e.t_day <= win_hi) {
        ++counts[static_cast<std::size_t>(e.code - 1)];
        any = true;
      }
    }
    if (!any) continue;  // not marketed within the chosen window
    ds.x.push_back(counts);
    ds.y.push_back(static_cast<std::int8_t>(rec.label()));
    ds.user_ids.push_back(rec.user_id);
  }
  return ds;
}

SplitResult split(const Dataset& dataset, const SplitSpec& spec) {
  if (dataset.empty()) throw std::invalid_argument("cannot split an empty dataset");
  const double frac_sum = spec.train_frac + spec.val_frac + spec.test_frac;
  if (std::abs(frac_sum - 1.0) > 1e-9) throw std::invalid_argument("split fractions must sum to 1");

  const std::size_t n = dataset.size();
  const auto n_val = static_cast<std::size_t>(std::floor(spec.val_frac * static_cast<double>(n)));
  const auto n_test = static_cast<std::size_t>(std::floor(spec.test_frac * static_cast<double>(n)));
  const std::size_t n_train = n - n_val - n_test;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng::Engine eng(spec.seed);
  eng.shuffle(order.begin(), order.end());

  auto take = [&](std::size_t from, std::size_t count) {
    Dataset part;
    part.lookback_days = dataset.lookback_days;
    part.x.reserve(count);
    part.y.reserve(count);
    part.user_ids.reserve(count);
    for (std::size_t i = from; i < from + count; ++i) {
      const std::size_t idx = order[i];
      part.x.push_back(dataset.x[idx]);
      part.y.push_back(dataset.y[idx]);
      part.user_ids.push_back(dataset.user_ids[idx]);
    }
    return part;
  };

  SplitResult result;
  result.train = take(0, n_train);
  result.val = take(n_train, n_val);
  result.test = take(n_train + n_val, n_test);
  return result;
}

ClassSummary class_summary(const Dataset& dataset) {
  if (dataset.empty()) throw std::invalid_argument("class_summary on empty dataset");
  ClassSummary s;
  for (std::int8_t label : dataset.y) {
    if (label) {
      ++s.n_pos;
    } else {
      ++s.n_neg;
    }
  }
  s.positive_rate = static_cast<double>(s.n_pos) / static_cast<double>(s.n_pos + s.n_neg);
  return s;
}

void write_dataset_csv(const Dataset& dataset, const std::filesystem::path& path) {
  detail::CsvWriter out(path);
  std::string& buf = out.buffer();
  buf += "user_id,y";
  for (int j = 1; j <= kNumTouchpoints; ++j) {
    buf += ",x";
    detail::append_int(buf, j);
  }
  buf += '\n';
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    buf += dataset.user_ids[i];
    buf += ',';
    detail::append_int(buf, static_cast<int>(dataset.y[i]));
    for (int j = 0; j < kNumTouchpoints; ++j) {
      buf += ',';
      detail::append_int(buf, dataset.x[i][static_cast<std::size_t>(j)]);
    }
    buf += '\n';
    out.maybe_flush();
  }
}

}  // namespace touchpred
