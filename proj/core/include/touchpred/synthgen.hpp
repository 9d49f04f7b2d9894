#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "touchpred/datamodel.hpp"

namespace touchpred {

// Pairwise product term on centered log(1+count) features.
struct InteractionTerm {
  int code_a = 0;  // 1..31
  int code_b = 0;  // 1..31, != code_a
  double weight = 0.0;
};

// Synthetic population: per user, per code, daily event counts follow a
// Poisson process at a user-scaled rate (user scale = exp(normal(0,
// heterogeneity_sigma^2))); the purchase label follows a logistic link on
// effect_bias + effect_weights . log(1+lifetime counts), optionally with
// interaction products and/or exponential time decay (see below). Buyers
// get a purchase day uniform over the horizon and later events dropped.
//
// Rates are compensated so that expected *emitted* (post-truncation) totals
// match rate_per_user_day * n_users * horizon_days, i.e. the calibration
// inputs; the factor folds in both E[user scale] and the expected share of
// buyer events lost to truncation.
struct GeneratorConfig {
  int n_users = 20556;
  int horizon_days = kDefaultHorizonDays;
  std::array<double, kNumTouchpoints> rate_per_user_day{};  // events per user-day
  double target_buyer_rate = 0.118;
  std::array<double, kNumTouchpoints> effect_weights{};
  double effect_bias = 0.0;    // used as-is when calibrate_bias is false
  bool calibrate_bias = true;  // bisect effect_bias to hit target_buyer_rate
  double heterogeneity_sigma = 0.5;
  std::uint64_t seed = 0;

  // Mechanism extensions. With decay_half_life_days > 0 the link features
  // become log(1 + sum over events up to the anchor day of
  // 2^(-(anchor - t)/half_life)) instead of log(1 + lifetime count).
  std::vector<InteractionTerm> interactions;
  double decay_half_life_days = 0.0;  // 0 = no decay
};

struct GroundTruth {
  std::array<double, kNumTouchpoints> effect_weights{};
  double effect_bias = 0.0;  // tuned value actually used for labels
  std::vector<InteractionTerm> interactions;
  double decay_half_life_days = 0.0;
  double heterogeneity_sigma = 0.0;
  std::uint64_t seed = 0;
  double target_buyer_rate = 0.0;
  double realized_buyer_rate = 0.0;
  std::vector<double> user_scales;  // aligned with the generated records
};

struct GeneratedPopulation {
  std::vector<UserRecord> records;
  GroundTruth truth;
};

// Per-user-day rate implied by an overall count table: count / (n_users *
// months * 30.4).
std::array<double, kNumTouchpoints> calibrate_rates(
    const std::array<std::int64_t, kNumTouchpoints>& overall_counts, int n_users, double months);

// Deterministic in config (including seed); each user's randomness derives
// from (seed, user index). Throws std::runtime_error when the bias search
// cannot bring the realized buyer rate within +-0.005 of the target.
GeneratedPopulation generate(const GeneratorConfig& config);

// Named presets used by the evaluation harness. All presets share the
// appendix-calibrated rates (20556 users, 40 months), the 0.118 target and
// heterogeneity 0.5, and differ in the planted mechanism:
//   "default"      broad +/- weights with several exact zeros
//   "interaction"  weak linear weights plus pairwise product terms
//   "decay"        weights applied to exponentially time-decayed counts
GeneratorConfig scenario_config(const std::string& scenario, int n_users, std::uint64_t seed);

// groundtruth.json: weights, tuned bias, seed, realized rate, mechanism
// extensions (user scales stay in memory only).
void write_groundtruth_json(const GroundTruth& truth, const std::filesystem::path& path);

}  // namespace touchpred
