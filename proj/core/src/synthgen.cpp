#include "touchpred/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "touchpred/rng.hpp"
#include "touchpred/touchpoints.hpp"

namespace touchpred {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr double kBiasTolerance = 0.005;
constexpr int kMaxBisectionIters = 200;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double logit(double u) { return std::log(u) - std::log1p(-u); }

void validate_config(const GeneratorConfig& config) {
  if (config.n_users < 1) throw std::invalid_argument("generate: n_users must be >= 1");
  if (config.horizon_days < 1) throw std::invalid_argument("generate: horizon_days must be >= 1");
  if (!(config.target_buyer_rate > 0.0 && config.target_buyer_rate < 1.0)) {
    throw std::invalid_argument("generate: target_buyer_rate must lie in (0,1)");
  }
  if (!(config.heterogeneity_sigma >= 0.0) || !std::isfinite(config.heterogeneity_sigma)) {
    throw std::invalid_argument("generate: heterogeneity_sigma must be finite and >= 0");
  }
  for (double r : config.rate_per_user_day) {
    if (!(r >= 0.0) || !std::isfinite(r)) {
      throw std::invalid_argument("generate: rates must be finite and >= 0");
    }
  }
  for (double w : config.effect_weights) {
    if (!std::isfinite(w)) throw std::invalid_argument("generate: effect weights must be finite");
  }
  for (const InteractionTerm& term : config.interactions) {
    if (term.code_a < 1 || term.code_a > kNumTouchpoints || term.code_b < 1 ||
        term.code_b > kNumTouchpoints || term.code_a == term.code_b) {
      throw std::invalid_argument("generate: interaction codes must be distinct and in 1..31");
    }
    if (!std::isfinite(term.weight)) {
      throw std::invalid_argument("generate: interaction weights must be finite");
    }
  }
  if (!(config.decay_half_life_days >= 0.0) || !std::isfinite(config.decay_half_life_days)) {
    throw std::invalid_argument("generate: decay_half_life_days must be finite and >= 0");
  }
}

struct UserSample {
  double scale = 1.0;
  std::array<std::int64_t, kNumTouchpoints> counts{};
  std::vector<std::int32_t> days;  // flat, grouped by code in code order
  std::int32_t anchor = 0;
  double u_label = 0.0;
};

// Canonical per-user draw order: scale, 31 lifetime counts, all event days
// (grouped by code), anchor day, label uniform. Both generation passes call
// this, so their streams agree by construction.
UserSample draw_user(rng::Engine& eng, const GeneratorConfig& config,
                     const std::array<double, kNumTouchpoints>& lambda_lifetime) {
  UserSample s;
  const double z = eng.normal();
  s.scale = std::exp(config.heterogeneity_sigma * z);
  std::int64_t total = 0;
  for (int j = 0; j < kNumTouchpoints; ++j) {
    s.counts[static_cast<std::size_t>(j)] = eng.poisson(s.scale * lambda_lifetime[j]);
    total += s.counts[static_cast<std::size_t>(j)];
  }
  s.days.reserve(static_cast<std::size_t>(total));
  const auto horizon = static_cast<std::uint64_t>(config.horizon_days);
  for (int j = 0; j < kNumTouchpoints; ++j) {
    for (std::int64_t e = 0; e < s.counts[static_cast<std::size_t>(j)]; ++e) {
      s.days.push_back(static_cast<std::int32_t>(eng.below(horizon)));
    }
  }
  s.anchor = static_cast<std::int32_t>(eng.below(horizon));
  s.u_label = eng.uniform();
  return s;
}

// Link features: log(1+lifetime count), or log(1+decayed count at the
// anchor) when a half-life is set.
std::array<double, kNumTouchpoints> link_features(const UserSample& s,
                                                  const GeneratorConfig& config) {
  std::array<double, kNumTouchpoints> f{};
  if (config.decay_half_life_days > 0.0) {
    const double h = config.decay_half_life_days;
    std::size_t offset = 0;
    for (int j = 0; j < kNumTouchpoints; ++j) {
      const auto c = static_cast<std::size_t>(s.counts[static_cast<std::size_t>(j)]);
      double decayed = 0.0;
      for (std::size_t e = 0; e < c; ++e) {
        const std::int32_t day = s.days[offset + e];
        if (day <= s.anchor) decayed += std::exp2(-static_cast<double>(s.anchor - day) / h);
      }
      offset += c;
      f[static_cast<std::size_t>(j)] = std::log1p(decayed);
    }
  } else {
    for (int j = 0; j < kNumTouchpoints; ++j) {
      f[static_cast<std::size_t>(j)] =
          std::log1p(static_cast<double>(s.counts[static_cast<std::size_t>(j)]));
    }
  }
  return f;
}

double logit_term(const std::array<double, kNumTouchpoints>& f, const GeneratorConfig& config,
                  const std::array<double, kNumTouchpoints>& centers) {
  double t = 0.0;
  for (int j = 0; j < kNumTouchpoints; ++j) {
    t += config.effect_weights[static_cast<std::size_t>(j)] * f[static_cast<std::size_t>(j)];
  }
  for (const InteractionTerm& term : config.interactions) {
    const auto a = static_cast<std::size_t>(term.code_a - 1);
    const auto b = static_cast<std::size_t>(term.code_b - 1);
    t += term.weight * (f[a] - centers[a]) * (f[b] - centers[b]);
  }
  return t;
}

// Bisection on the realized-rate step function r(b) = #{flip < b}/n. Throws
// when no bias within the bracket reaches the target to within +-0.005.
double bisect_bias(std::vector<double> flips, double target) {
  const auto n = static_cast<double>(flips.size());
  std::sort(flips.begin(), flips.end());
  auto realized = [&](double bias) {
    const auto below =
        std::lower_bound(flips.begin(), flips.end(), bias) - flips.begin();
    return static_cast<double>(below) / n;
  };
  double lo = 0.0;
  double hi = 0.0;
  bool have_finite = false;
  for (double f : flips) {
    if (std::isfinite(f)) {
      if (!have_finite) {
        lo = f;
        hi = f;
        have_finite = true;
      } else {
        lo = std::min(lo, f);
        hi = std::max(hi, f);
      }
    }
  }
  if (!have_finite) throw std::runtime_error("synthgen: bias calibration failed (degenerate labels)");
  lo -= 1.0;
  hi += 1.0;
  for (int iter = 0; iter < kMaxBisectionIters; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double r = realized(mid);
    if (std::abs(r - target) <= kBiasTolerance) return mid;
    if (r < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  throw std::runtime_error(
      "synthgen: bias calibration failed to reach the target buyer rate within tolerance");
}

std::string user_id_for(int index) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "u%06d", index);
  return std::string(buf);
}

}  // namespace

std::array<double, kNumTouchpoints> calibrate_rates(
    const std::array<std::int64_t, kNumTouchpoints>& overall_counts, int n_users, double months) {
  if (n_users < 1) throw std::invalid_argument("calibrate_rates: n_users must be >= 1");
  if (!(months > 0.0)) throw std::invalid_argument("calibrate_rates: months must be positive");
  std::array<double, kNumTouchpoints> rates{};
  const double user_days = static_cast<double>(n_users) * months * 30.4;
  for (int j = 0; j < kNumTouchpoints; ++j) {
    const std::int64_t c = overall_counts[static_cast<std::size_t>(j)];
    if (c < 0) throw std::invalid_argument("calibrate_rates: counts must be >= 0");
    rates[static_cast<std::size_t>(j)] = static_cast<double>(c) / user_days;
  }
  return rates;
}

GeneratedPopulation generate(const GeneratorConfig& config) {
  validate_config(config);
  const int n = config.n_users;
  const double horizon = static_cast<double>(config.horizon_days);

  // Expected emitted totals shrink by E[user scale] inflation being absent
  // from the rates and by buyer truncation keeping (anchor+1)/H of events in
  // expectation; compensate the lifetime intensity for both so emitted
  // totals match rate * n_users * horizon.
  const double sigma = config.heterogeneity_sigma;
  const double expected_scale = std::exp(0.5 * sigma * sigma);
  const double kept_share_buyer = (horizon + 1.0) / (2.0 * horizon);
  const double kept_share = 1.0 - config.target_buyer_rate * (1.0 - kept_share_buyer);
  const double compensation = 1.0 / (expected_scale * kept_share);

  std::array<double, kNumTouchpoints> lambda_lifetime{};
  for (int j = 0; j < kNumTouchpoints; ++j) {
    lambda_lifetime[static_cast<std::size_t>(j)] =
        compensation * config.rate_per_user_day[static_cast<std::size_t>(j)] * horizon;
  }

  // Centers for interaction products: expected link feature for a scale-1
  // user (with decay, the long-run decayed mass h/ln2 per unit daily rate).
  std::array<double, kNumTouchpoints> centers{};
  for (int j = 0; j < kNumTouchpoints; ++j) {
    double expected_count = lambda_lifetime[static_cast<std::size_t>(j)];
    if (config.decay_half_life_days > 0.0) {
      expected_count *= config.decay_half_life_days / (horizon * std::numbers::ln2);
    }
    centers[static_cast<std::size_t>(j)] = std::log1p(expected_count);
  }

  // Pass 1: draw every user, keep only the label-flip point
  // logit(u) - logit_term, and tune the bias against the target rate.
  std::vector<double> flips(static_cast<std::size_t>(n));
  for (int u = 0; u < n; ++u) {
    rng::Engine eng = rng::Engine::streamed(config.seed, static_cast<std::uint64_t>(u));
    const UserSample s = draw_user(eng, config, lambda_lifetime);
    const double ell = logit_term(link_features(s, config), config, centers);
    flips[static_cast<std::size_t>(u)] = logit(s.u_label) - ell;
  }

  const double bias = config.calibrate_bias
                          ? bisect_bias(flips, config.target_buyer_rate)
                          : config.effect_bias;

  // Pass 2: redraw (identical streams), decide labels from the tuned bias,
  // truncate buyers at their anchor, and assemble records.
  GeneratedPopulation out;
  out.records.resize(static_cast<std::size_t>(n));
  out.truth.user_scales.resize(static_cast<std::size_t>(n));
  std::int64_t buyers = 0;
  for (int u = 0; u < n; ++u) {
    rng::Engine eng = rng::Engine::streamed(config.seed, static_cast<std::uint64_t>(u));
    UserSample s = draw_user(eng, config, lambda_lifetime);
    const bool buyer = flips[static_cast<std::size_t>(u)] < bias;

    UserRecord& rec = out.records[static_cast<std::size_t>(u)];
    rec.user_id = user_id_for(u);
    rec.events.reserve(s.days.size());
    std::size_t offset = 0;
    for (int j = 0; j < kNumTouchpoints; ++j) {
      const auto c = static_cast<std::size_t>(s.counts[static_cast<std::size_t>(j)]);
      for (std::size_t e = 0; e < c; ++e) {
        const std::int32_t day = s.days[offset + e];
        if (buyer && day > s.anchor) continue;
        rec.events.push_back({day, j + 1});
      }
      offset += c;
    }
    std::sort(rec.events.begin(), rec.events.end(), [](const auto& a, const auto& b) {
      if (a.t_day != b.t_day) return a.t_day < b.t_day;
      return a.code < b.code;
    });
    if (buyer) {
      rec.purchase_day = s.anchor;
      ++buyers;
    }
    out.truth.user_scales[static_cast<std::size_t>(u)] = s.scale;
  }

  out.truth.effect_weights = config.effect_weights;
  out.truth.effect_bias = bias;
  out.truth.interactions = config.interactions;
  out.truth.decay_half_life_days = config.decay_half_life_days;
  out.truth.heterogeneity_sigma = config.heterogeneity_sigma;
  out.truth.seed = config.seed;
  out.truth.target_buyer_rate = config.target_buyer_rate;
  out.truth.realized_buyer_rate = static_cast<double>(buyers) / static_cast<double>(n);
  if (config.calibrate_bias &&
      std::abs(out.truth.realized_buyer_rate - config.target_buyer_rate) > kBiasTolerance) {
    throw std::runtime_error("synthgen: realized buyer rate drifted from the calibrated value");
  }
  return out;
}

GeneratorConfig scenario_config(const std::string& scenario, int n_users, std::uint64_t seed) {
  GeneratorConfig config;
  config.n_users = n_users;
  config.seed = seed;
  config.horizon_days = kDefaultHorizonDays;
  config.rate_per_user_day = calibrate_rates(touchpoint_overall_counts(), 20556, 40.0);
  config.target_buyer_rate = 0.118;
  config.heterogeneity_sigma = 0.5;
  auto w = [&config](int code, double weight) {
    config.effect_weights[static_cast<std::size_t>(code - 1)] = weight;
  };
  if (scenario == "default") {
    // Broad +/- pattern. Magnitudes are largest on mid-volume codes, where
    // per-user count variation carries the most information per unit weight,
    // and taper off for the very high-volume codes whose log counts barely
    // vary across users. The signed weights are balanced so that the summed
    // effect of a user's overall activity level stays small: a large
    // imbalance would couple the label to raw event volume and visibly skew
    // per-code emitted totals. Codes 3-8, 15, 29, 30 stay exactly zero.
    w(1, -1.5);
    w(9, 0.5);
    w(10, 2.2);
    w(11, -0.5);
    w(12, -2.2);
    w(13, -1.6);
    w(14, 2.4);
    w(16, 3.0);
    w(18, 0.7);
    w(19, 2.7);
    w(20, 1.0);
    w(21, -2.0);
    w(22, -0.7);
    w(23, -2.4);
    w(24, -1.0);
    w(25, 1.9);
    w(26, -2.7);
    w(27, 1.6);
    w(28, -1.8);
    w(31, 2.0);
  } else if (scenario == "interaction") {
    w(1, 0.3);
    w(17, 0.25);
    w(27, -0.3);
    w(31, -0.25);
    // The product weights sum to zero. Each centered factor is roughly the
    // user's log activity scale plus per-code Poisson noise, so any imbalance
    // in the summed weights would plant a squared-log-scale term that a
    // volume-sensitive model picks up without representing interactions at
    // all. Balancing the sum confines the signal to the cross terms.
    config.interactions = {
        {10, 21, 3.8}, {12, 25, -3.6}, {14, 16, 3.4}, {19, 23, -3.2}, {26, 28, -0.4},
    };
  } else if (scenario == "decay") {
    config.decay_half_life_days = 75.0;
    w(10, 1.2);
    w(12, -1.0);
    w(13, 0.9);
    w(14, 1.1);
    w(16, -0.8);
    w(19, 1.0);
    w(20, 0.8);
    w(21, -1.2);
    w(23, 1.0);
    w(24, -0.7);
    w(25, 0.9);
    w(26, 1.1);
    w(27, 0.8);
    w(28, -0.9);
  } else {
    throw std::invalid_argument("unknown scenario '" + scenario +
                                "' (expected default, interaction, or decay)");
  }
  return config;
}

void write_groundtruth_json(const GroundTruth& truth, const std::filesystem::path& path) {
  ordered_json doc;
  doc["format"] = "touchpred-groundtruth-v1";
  doc["seed"] = truth.seed;
  doc["effect_bias"] = truth.effect_bias;
  doc["target_buyer_rate"] = truth.target_buyer_rate;
  doc["realized_buyer_rate"] = truth.realized_buyer_rate;
  doc["heterogeneity_sigma"] = truth.heterogeneity_sigma;
  doc["decay_half_life_days"] = truth.decay_half_life_days;
  doc["effect_weights"] = truth.effect_weights;
  ordered_json terms = ordered_json::array();
  for (const InteractionTerm& t : truth.interactions) {
    terms.push_back({{"code_a", t.code_a}, {"code_b", t.code_b}, {"weight", t.weight}});
  }
  doc["interactions"] = std::move(terms);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << doc.dump(2) << "\n";
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace touchpred
