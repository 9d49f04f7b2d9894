#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numbers>
#include <set>
#include <vector>

#include "support/testutil.hpp"
#include "touchpred/rng.hpp"
#include "touchpred/synthgen.hpp"
#include "touchpred/touchpoints.hpp"

using namespace touchpred;
using testutil::TempDir;

namespace {

// Compact config exercising a handful of codes; horizon and rates sized so a
// full oracle replay stays fast.
GeneratorConfig tiny_config(std::uint64_t seed) {
  GeneratorConfig config;
  config.n_users = 60;
  config.horizon_days = 180;
  config.rate_per_user_day = {};
  config.rate_per_user_day[0] = 0.05;   // code 1
  config.rate_per_user_day[4] = 0.02;   // code 5
  config.rate_per_user_day[12] = 0.08;  // code 13
  config.rate_per_user_day[30] = 0.01;  // code 31
  config.target_buyer_rate = 0.25;
  config.effect_weights = {};
  config.effect_weights[0] = 1.2;
  config.effect_weights[12] = -0.9;
  config.effect_weights[30] = 0.7;
  config.heterogeneity_sigma = 0.4;
  config.seed = seed;
  return config;
}

struct OracleUser {
  double scale = 1.0;
  std::array<std::int64_t, kNumTouchpoints> counts{};
  std::vector<std::vector<std::int32_t>> days_by_code;
  std::int32_t anchor = 0;
  double u_label = 0.0;
  std::array<double, kNumTouchpoints> features{};
  double flip = 0.0;
};

// Replays the documented per-user draw order with independent code: one
// normal (scale), a Poisson count per code, that many day draws per code,
// one anchor draw, one label uniform. Any silent reorder in the library
// breaks this replay.
OracleUser replay_user(const GeneratorConfig& config, int user_index) {
  const double horizon = static_cast<double>(config.horizon_days);
  const double sigma = config.heterogeneity_sigma;
  const double expected_scale = std::exp(0.5 * sigma * sigma);
  const double kept_share_buyer = (horizon + 1.0) / (2.0 * horizon);
  const double kept_share = 1.0 - config.target_buyer_rate * (1.0 - kept_share_buyer);
  const double compensation = 1.0 / (expected_scale * kept_share);

  std::array<double, kNumTouchpoints> lambda{};
  std::array<double, kNumTouchpoints> centers{};
  for (int j = 0; j < kNumTouchpoints; ++j) {
    lambda[static_cast<std::size_t>(j)] =
        compensation * config.rate_per_user_day[static_cast<std::size_t>(j)] * horizon;
    double expected_count = lambda[static_cast<std::size_t>(j)];
    if (config.decay_half_life_days > 0.0) {
      expected_count *= config.decay_half_life_days / (horizon * std::numbers::ln2);
    }
    centers[static_cast<std::size_t>(j)] = std::log1p(expected_count);
  }

  rng::Engine eng = rng::Engine::streamed(config.seed, static_cast<std::uint64_t>(user_index));
  OracleUser u;
  u.scale = std::exp(sigma * eng.normal());
  for (int j = 0; j < kNumTouchpoints; ++j) {
    u.counts[static_cast<std::size_t>(j)] =
        eng.poisson(u.scale * lambda[static_cast<std::size_t>(j)]);
  }
  u.days_by_code.resize(kNumTouchpoints);
  for (int j = 0; j < kNumTouchpoints; ++j) {
    for (std::int64_t e = 0; e < u.counts[static_cast<std::size_t>(j)]; ++e) {
      u.days_by_code[static_cast<std::size_t>(j)].push_back(
          static_cast<std::int32_t>(eng.below(static_cast<std::uint64_t>(config.horizon_days))));
    }
  }
  u.anchor = static_cast<std::int32_t>(eng.below(static_cast<std::uint64_t>(config.horizon_days)));
  u.u_label = eng.uniform();

  for (int j = 0; j < kNumTouchpoints; ++j) {
    if (config.decay_half_life_days > 0.0) {
      double mass = 0.0;
      for (std::int32_t day : u.days_by_code[static_cast<std::size_t>(j)]) {
        if (day <= u.anchor) {
          mass += std::exp2(-static_cast<double>(u.anchor - day) / config.decay_half_life_days);
        }
      }
      u.features[static_cast<std::size_t>(j)] = std::log1p(mass);
    } else {
      u.features[static_cast<std::size_t>(j)] =
          std::log1p(static_cast<double>(u.counts[static_cast<std::size_t>(j)]));
    }
  }

  double ell = 0.0;
  for (int j = 0; j < kNumTouchpoints; ++j) {
    ell += config.effect_weights[static_cast<std::size_t>(j)] *
           u.features[static_cast<std::size_t>(j)];
  }
  for (const InteractionTerm& term : config.interactions) {
    const auto a = static_cast<std::size_t>(term.code_a - 1);
    const auto b = static_cast<std::size_t>(term.code_b - 1);
    ell += term.weight * (u.features[a] - centers[a]) * (u.features[b] - centers[b]);
  }
  u.flip = (std::log(u.u_label) - std::log1p(-u.u_label)) - ell;
  return u;
}

// Multiset of (day, code) events the record should contain for this user.
std::vector<TouchpointEvent> oracle_events(const OracleUser& u, bool buyer) {
  std::vector<TouchpointEvent> events;
  for (int j = 0; j < kNumTouchpoints; ++j) {
    for (std::int32_t day : u.days_by_code[static_cast<std::size_t>(j)]) {
      if (buyer && day > u.anchor) continue;
      events.push_back({day, j + 1});
    }
  }
  std::sort(events.begin(), events.end(), [](auto a, auto b) {
    return a.t_day != b.t_day ? a.t_day < b.t_day : a.code < b.code;
  });
  return events;
}

void check_against_oracle(const GeneratorConfig& config) {
  const GeneratedPopulation pop = generate(config);
  REQUIRE(pop.records.size() == static_cast<std::size_t>(config.n_users));
  REQUIRE(pop.truth.user_scales.size() == pop.records.size());

  int oracle_buyers = 0;
  for (int u = 0; u < config.n_users; ++u) {
    const OracleUser oracle = replay_user(config, u);
    const UserRecord& rec = pop.records[static_cast<std::size_t>(u)];
    const bool buyer = oracle.flip < pop.truth.effect_bias;
    oracle_buyers += buyer ? 1 : 0;

    CHECK(pop.truth.user_scales[static_cast<std::size_t>(u)] == oracle.scale);
    CHECK(rec.purchase_day.has_value() == buyer);
    if (buyer) CHECK(*rec.purchase_day == oracle.anchor);

    const std::vector<TouchpointEvent> expect = oracle_events(oracle, buyer);
    REQUIRE(rec.events.size() == expect.size());
    for (std::size_t e = 0; e < expect.size(); ++e) {
      CHECK(rec.events[e].t_day == expect[e].t_day);
      CHECK(rec.events[e].code == expect[e].code);
    }
  }
  CHECK(pop.truth.realized_buyer_rate ==
        static_cast<double>(oracle_buyers) / static_cast<double>(config.n_users));
}

}  // namespace

TEST_SUITE("synthgen") {

TEST_CASE("calibrate_rates pins the appendix-derived values") {
  const auto rates = calibrate_rates(touchpoint_overall_counts(), 20556, 40.0);
  // count / (20556 users * 40 months * 30.4 days)
  CHECK(rates[30 - 1] == doctest::Approx(3.12e-6).epsilon(1e-3));   // 78 events
  CHECK(rates[11 - 1] == doctest::Approx(0.2799).epsilon(1e-3));    // 6,995,656 events
  CHECK(rates[11 - 1] == doctest::Approx(6995656.0 / (20556.0 * 40.0 * 30.4)).epsilon(1e-12));
  for (double r : rates) CHECK(r > 0.0);

  CHECK_THROWS_AS(calibrate_rates(touchpoint_overall_counts(), 0, 40.0), std::invalid_argument);
  CHECK_THROWS_AS(calibrate_rates(touchpoint_overall_counts(), 10, 0.0), std::invalid_argument);
}

TEST_CASE("generate replays the documented draw order (lifetime-count link)") {
  check_against_oracle(tiny_config(314));
}

TEST_CASE("generate replays the documented draw order (interactions)") {
  GeneratorConfig config = tiny_config(777);
  config.interactions = {{1, 13, 1.5}, {13, 31, -2.0}};
  check_against_oracle(config);
}

TEST_CASE("generate replays the documented draw order (decayed link)") {
  GeneratorConfig config = tiny_config(555);
  config.decay_half_life_days = 20.0;
  check_against_oracle(config);
}

TEST_CASE("generate is deterministic and seed-sensitive") {
  const GeneratorConfig config = tiny_config(42);
  const GeneratedPopulation a = generate(config);
  const GeneratedPopulation b = generate(config);
  CHECK(a.truth.effect_bias == b.truth.effect_bias);
  CHECK(a.truth.realized_buyer_rate == b.truth.realized_buyer_rate);
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].user_id == b.records[i].user_id);
    CHECK(a.records[i].purchase_day == b.records[i].purchase_day);
    CHECK(a.records[i].events.size() == b.records[i].events.size());
  }

  GeneratorConfig other = config;
  other.seed = 43;
  const GeneratedPopulation c = generate(other);
  bool any_difference = c.truth.effect_bias != a.truth.effect_bias;
  for (std::size_t i = 0; i < a.records.size() && !any_difference; ++i) {
    any_difference = a.records[i].events.size() != c.records[i].events.size();
  }
  CHECK(any_difference);
}

TEST_CASE("generated records are well-formed") {
  const GeneratorConfig config = tiny_config(7);
  const GeneratedPopulation pop = generate(config);
  std::set<std::string> ids;
  for (const UserRecord& rec : pop.records) {
    ids.insert(rec.user_id);
    CHECK(rec.user_id.size() == 7);  // "u%06d"
    CHECK(rec.user_id[0] == 'u');
    for (std::size_t e = 0; e < rec.events.size(); ++e) {
      CHECK(rec.events[e].t_day >= 0);
      CHECK(rec.events[e].t_day < config.horizon_days);
      CHECK(rec.events[e].code >= 1);
      CHECK(rec.events[e].code <= kNumTouchpoints);
      if (e > 0) {
        const bool ordered =
            rec.events[e - 1].t_day < rec.events[e].t_day ||
            (rec.events[e - 1].t_day == rec.events[e].t_day &&
             rec.events[e - 1].code <= rec.events[e].code);
        CHECK(ordered);
      }
      if (rec.purchase_day.has_value()) CHECK(rec.events[e].t_day <= *rec.purchase_day);
    }
    if (rec.purchase_day.has_value()) {
      CHECK(*rec.purchase_day >= 0);
      CHECK(*rec.purchase_day < config.horizon_days);
    }
  }
  CHECK(ids.size() == pop.records.size());
  CHECK(pop.records[0].user_id == "u000000");
}

TEST_CASE("bias calibration hits the target buyer rate within +-0.005") {
  GeneratorConfig config = tiny_config(11);
  config.n_users = 2000;
  const GeneratedPopulation pop = generate(config);
  CHECK(std::abs(pop.truth.realized_buyer_rate - config.target_buyer_rate) <= 0.005);
  std::int64_t buyers = 0;
  for (const UserRecord& rec : pop.records) buyers += rec.purchase_day.has_value() ? 1 : 0;
  CHECK(pop.truth.realized_buyer_rate ==
        static_cast<double>(buyers) / static_cast<double>(config.n_users));
}

TEST_CASE("bias calibration throws when the target is unreachable") {
  GeneratorConfig config = tiny_config(13);
  config.n_users = 5;  // rate granularity 0.2 cannot reach 0.118 +- 0.005
  config.target_buyer_rate = 0.118;
  CHECK_THROWS_AS(generate(config), std::runtime_error);
}

TEST_CASE("calibrate_bias = false uses the provided bias verbatim") {
  GeneratorConfig config = tiny_config(17);
  config.calibrate_bias = false;
  config.effect_bias = -1.25;
  const GeneratedPopulation pop = generate(config);
  CHECK(pop.truth.effect_bias == -1.25);
  // Oracle agreement still holds with the fixed bias.
  int buyers = 0;
  for (int u = 0; u < config.n_users; ++u) {
    const OracleUser oracle = replay_user(config, u);
    const bool buyer = oracle.flip < -1.25;
    buyers += buyer ? 1 : 0;
    CHECK(pop.records[static_cast<std::size_t>(u)].purchase_day.has_value() == buyer);
  }
  CHECK(pop.truth.realized_buyer_rate ==
        static_cast<double>(buyers) / static_cast<double>(config.n_users));
}

TEST_CASE("emitted totals match rate * users * horizon despite scale and truncation") {
  // Rates compensate for E[scale] = exp(sigma^2/2) inflation and for buyer
  // truncation; realized totals should land within a few percent.
  GeneratorConfig config;
  config.n_users = 3000;
  config.horizon_days = 150;
  config.rate_per_user_day = {};
  config.rate_per_user_day[0] = 0.10;  // expected total 45,000
  config.rate_per_user_day[1] = 0.05;  // expected total 22,500
  config.target_buyer_rate = 0.25;
  config.effect_weights = {};
  config.effect_weights[0] = 0.8;
  config.effect_weights[1] = -0.6;
  config.heterogeneity_sigma = 0.5;
  config.seed = 99;

  const GeneratedPopulation pop = generate(config);
  std::array<std::int64_t, kNumTouchpoints> totals{};
  for (const UserRecord& rec : pop.records) {
    for (const TouchpointEvent& e : rec.events) ++totals[static_cast<std::size_t>(e.code - 1)];
  }
  const double expected0 =
      config.rate_per_user_day[0] * config.n_users * config.horizon_days;
  const double expected1 =
      config.rate_per_user_day[1] * config.n_users * config.horizon_days;
  CHECK(std::abs(static_cast<double>(totals[0]) - expected0) <= 0.05 * expected0);
  CHECK(std::abs(static_cast<double>(totals[1]) - expected1) <= 0.05 * expected1);
  CHECK(totals[5] == 0);  // zero-rate codes emit nothing
}

TEST_CASE("scenario presets share calibrated rates and differ in mechanism") {
  const GeneratorConfig d = scenario_config("default", 4000, 5);
  const GeneratorConfig i = scenario_config("interaction", 4000, 5);
  const GeneratorConfig y = scenario_config("decay", 4000, 5);

  for (const GeneratorConfig* c : {&d, &i, &y}) {
    CHECK(c->n_users == 4000);
    CHECK(c->seed == 5);
    CHECK(c->horizon_days == kDefaultHorizonDays);
    CHECK(c->target_buyer_rate == 0.118);
    CHECK(c->heterogeneity_sigma == 0.5);
    CHECK(c->rate_per_user_day[11 - 1] ==
          doctest::Approx(6995656.0 / (20556.0 * 1216.0)).epsilon(1e-12));
  }

  CHECK(d.interactions.empty());
  CHECK(d.decay_half_life_days == 0.0);
  CHECK(d.effect_weights[0] != 0.0);
  for (int code : {3, 4, 5, 6, 7, 8, 15, 29, 30}) {
    CHECK(d.effect_weights[static_cast<std::size_t>(code - 1)] == 0.0);
  }

  CHECK(i.interactions.size() == 5);
  CHECK(i.decay_half_life_days == 0.0);

  CHECK(y.interactions.empty());
  CHECK(y.decay_half_life_days == 75.0);

  CHECK_THROWS_AS(scenario_config("linear", 100, 1), std::invalid_argument);
}

TEST_CASE("groundtruth JSON carries the mechanism but not per-user scales") {
  GeneratorConfig config = tiny_config(23);
  config.interactions = {{1, 13, 0.5}};
  const GeneratedPopulation pop = generate(config);
  TempDir dir("truth");
  write_groundtruth_json(pop.truth, dir / "groundtruth.json");

  std::ifstream in(dir / "groundtruth.json");
  const nlohmann::json doc = nlohmann::json::parse(in);
  CHECK(doc.at("format") == "touchpred-groundtruth-v1");
  CHECK(doc.at("seed").get<std::uint64_t>() == 23);
  CHECK(doc.at("effect_bias").get<double>() == pop.truth.effect_bias);
  CHECK(doc.at("target_buyer_rate").get<double>() == 0.25);
  CHECK(doc.at("realized_buyer_rate").get<double>() == pop.truth.realized_buyer_rate);
  CHECK(doc.at("heterogeneity_sigma").get<double>() == 0.4);
  CHECK(doc.at("effect_weights").size() == 31);
  CHECK(doc.at("effect_weights")[0].get<double>() == 1.2);
  REQUIRE(doc.at("interactions").size() == 1);
  CHECK(doc.at("interactions")[0].at("code_a") == 1);
  CHECK(doc.at("interactions")[0].at("weight").get<double>() == 0.5);
  CHECK(!doc.contains("user_scales"));
}

TEST_CASE("generator config validation") {
  GeneratorConfig config = tiny_config(1);
  config.n_users = 0;
  CHECK_THROWS_AS(generate(config), std::invalid_argument);
  config = tiny_config(1);
  config.target_buyer_rate = 1.5;
  CHECK_THROWS_AS(generate(config), std::invalid_argument);
  config = tiny_config(1);
  config.rate_per_user_day[3] = -0.1;
  CHECK_THROWS_AS(generate(config), std::invalid_argument);
  config = tiny_config(1);
  config.interactions = {{2, 2, 1.0}};
  CHECK_THROWS_AS(generate(config), std::invalid_argument);
  config = tiny_config(1);
  config.decay_half_life_days = -5.0;
  CHECK_THROWS_AS(generate(config), std::invalid_argument);
}

}  // TEST_SUITE
