#include <doctest.h>

#include <sstream>

#include "oracles.hpp"
#include "zccloud/errors.hpp"
#include "zccloud/market_data.hpp"
#include "zccloud/stranded_power.hpp"

using namespace zcc;

namespace {

std::vector<SiteSeries> parse(const std::string& text) {
  std::istringstream in(text);
  return parse_market_csv(in);
}

const char* kHeader = "site_id,timestamp_utc,lmp_usd_per_mwh,power_mw\n";

}  // namespace

TEST_CASE("three rows make one series of three slots") {
  const auto s = parse(std::string(kHeader) +
                       "A,2014-01-01T00:00:00Z,-3,10\n"
                       "A,2014-01-01T00:05:00Z,4.5,11\n"
                       "A,2014-01-01T00:10:00Z,20,0\n");
  REQUIRE(s.size() == 1);
  CHECK(s[0].site_id == "A");
  CHECK(s[0].epoch == kDefaultEpoch);
  REQUIRE(s[0].size() == 3);
  CHECK(s[0].slots[0].lmp == -3.0);
  CHECK(s[0].slots[1].power == 11.0);
  CHECK(s[0].slots[2].t == kDefaultEpoch + 600);
}

TEST_CASE("interleaved sites are partitioned and sorted") {
  const auto s = parse(std::string(kHeader) +
                       "B,2014-01-01T00:05:00Z,2,1\n"
                       "A,2014-01-01T00:05:00Z,1,1\n"
                       "B,2014-01-01T00:00:00Z,3,1\n"
                       "A,2014-01-01T00:00:00Z,0,1\n");
  REQUIRE(s.size() == 2);
  CHECK(s[0].site_id == "A");
  CHECK(s[1].site_id == "B");
  CHECK(s[0].slots[0].lmp == 0.0);
  CHECK(s[0].slots[1].lmp == 1.0);
  CHECK(s[1].slots[0].lmp == 3.0);
  CHECK(s[1].slots[1].lmp == 2.0);
}

TEST_CASE("repeated site and timestamp is rejected with the key") {
  try {
    parse(std::string(kHeader) + "A,2014-01-01T00:00:00Z,1,1\nA,2014-01-01T00:00:00Z,2,1\n");
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("'A'") != std::string::npos);
    CHECK(msg.find("2014-01-01T00:00:00Z") != std::string::npos);
  }
}

TEST_CASE("gaps become missing slots and off-grid times snap") {
  const auto s = parse(std::string(kHeader) +
                       "A,2014-01-01T00:00:00Z,1,1\n"
                       "A,2014-01-01T00:17:30Z,2,5\n");
  REQUIRE(s[0].size() == 4);
  CHECK_FALSE(s[0].slots[0].missing);
  CHECK(s[0].slots[1].missing);
  CHECK(s[0].slots[2].missing);
  CHECK(s[0].slots[3].t == kDefaultEpoch + 900);
  CHECK(s[0].slots[3].power == 5.0);
}

TEST_CASE("the latest observation within a slot wins") {
  const auto s = parse(std::string(kHeader) +
                       "A,2014-01-01T00:04:00Z,9,1\n"
                       "A,2014-01-01T00:01:00Z,7,1\n");
  REQUIRE(s[0].size() == 1);
  CHECK(s[0].slots[0].lmp == 9.0);
}

TEST_CASE("malformed input reports the line") {
  auto line_of = [](const std::string& text) {
    try {
      parse(text);
    } catch (const ParseError& e) {
      return e.line();
    }
    return std::size_t{0};
  };
  CHECK(line_of(std::string(kHeader) + "A,2014-01-01T00:00:00Z,1,1\nA,2014-01-01T00:05:00Z,abc,1\n") == 3);
  CHECK(line_of(std::string(kHeader) + "A,not-a-time,1,1\n") == 2);
  CHECK(line_of(std::string(kHeader) + "A,2014-01-01T00:00:00Z,1,-4\n") == 2);
  CHECK(line_of(std::string(kHeader) + "A,2014-01-01T00:00:00Z,1\n") == 2);
  CHECK_THROWS_AS(parse(""), EmptyInputError);
  CHECK_THROWS_AS(parse(kHeader), EmptyInputError);
  CHECK_THROWS_AS(parse("site,ts,lmp,power\nA,2014-01-01T00:00:00Z,1,1\n"), ValidationError);
}

TEST_CASE("custom column mapping") {
  std::istringstream in("power,when,price,node\n5,2014-01-01T00:00:00Z,-2,X\n");
  ColumnMapping m{"node", "when", "price", "power"};
  const auto s = parse_market_csv(in, m);
  REQUIRE(s.size() == 1);
  CHECK(s[0].site_id == "X");
  CHECK(s[0].slots[0].lmp == -2.0);
  CHECK(s[0].slots[0].power == 5.0);
}

TEST_CASE("export then ingest reproduces the series exactly") {
  SynthMarketConfig c;
  c.horizon = 20 * kDaySeconds;
  c.seed = 42;
  SiteSeries a = synthesize_market(c);
  a.slots[17].missing = true;
  a.slots[17].lmp = 0.0;
  a.slots[17].power = 0.0;
  c.site_id = "second";
  c.seed = 43;
  const SiteSeries b = synthesize_market(c);
  std::vector<SiteSeries> in{b, a};
  std::ostringstream out;
  export_csv(out, in);
  const auto back = parse(out.str());
  REQUIRE(back.size() == 2);
  CHECK(back[0] == b);
  CHECK(back[1] == a);
}

TEST_CASE("synthesis is deterministic and on the grid") {
  SynthMarketConfig c;
  c.horizon = 30 * kDaySeconds;
  const SiteSeries a = synthesize_market(c);
  const SiteSeries b = synthesize_market(c);
  CHECK(a == b);
  c.seed = 2;
  CHECK_FALSE(synthesize_market(c) == a);
  CHECK(a.size() == 30 * 288);
  for (const MarketSlot& s : a.slots) {
    CHECK((s.t - a.epoch) % kSlotSeconds == 0);
    CHECK(s.power >= 0.0);
  }
}

TEST_CASE("no episodes means prices stay at or above the base floor") {
  SynthMarketConfig c;
  c.horizon = 60 * kDaySeconds;
  c.episode_rate_per_day = 0.0;
  const SiteSeries s = synthesize_market(c);
  for (const MarketSlot& slot : s.slots) CHECK(slot.lmp >= c.base_price_floor);
  CHECK(duty_factor(detect_intervals(s, SpModel::lmp(0)), s.horizon()) == 0.0);
}

TEST_CASE("episodes covering 80% of slots give LMP0 duty factor near 0.8") {
  // Pure two-state process: no calm spells, no in-episode recoveries and
  // episode prices well below zero, so LMP0 slots are exactly episode slots.
  // A narrow duration law keeps one year of sampling noise small.
  SynthMarketConfig c;
  c.episode_recovery_prob = 0.0;
  c.calm_rate_per_day = 0.0;
  c.episode_price_sd = 2.0;
  c.episode_mean_hours = 12.0;
  c.episode_duration_cv = 0.3;
  c.episode_rate_per_day = 8.0;  // mean gap 3 h: 12 / (12 + 3) = 0.8
  const SiteSeries s = synthesize_market(c);
  const double df = oracle::lmp_slot_fraction(s, 0.0);
  CHECK(oracle::near(df, 0.80, 0.02));
  CHECK(duty_factor(detect_intervals(s, SpModel::lmp(0)), s.horizon()) == doctest::Approx(df));
}

TEST_CASE("episode power stays positive outside calm spells") {
  SynthMarketConfig c;
  c.horizon = 30 * kDaySeconds;
  c.calm_rate_per_day = 0.0;
  const SiteSeries s = synthesize_market(c);
  for (const MarketSlot& slot : s.slots) CHECK(slot.power > 0.0);
}

TEST_CASE("invalid synthetic configs are rejected") {
  SynthMarketConfig c;
  c.horizon = kDaySeconds - kSlotSeconds;
  CHECK_THROWS_AS(validate(c), ConfigError);
  c = {};
  c.mean_power_mw = 0.0;
  CHECK_THROWS_AS(validate(c), ConfigError);
  c = {};
  c.episode_mean_hours = -1.0;
  CHECK_THROWS_AS(validate(c), ConfigError);
  c = {};
  c.power_persistence = 1.0;
  CHECK_THROWS_AS(validate(c), ConfigError);
}

TEST_CASE("calibration hits the published duty factors") {
  struct Target {
    SpModel model;
    double df;
  };
  for (const Target& t : {Target{SpModel::lmp(0), 0.21}, Target{SpModel::lmp(5), 0.24},
                          Target{SpModel::net_price(0), 0.60}, Target{SpModel::net_price(5), 0.80}}) {
    CAPTURE(t.model.name());
    const SynthMarketConfig c = calibrate_to_duty_factor(t.df, t.model, SynthMarketConfig{});
    const SiteSeries s = synthesize_market(c);
    CHECK(oracle::near(duty_factor(detect_intervals(s, t.model), s.horizon()), t.df, 0.02));
  }
}

TEST_CASE("unreachable calibration target reports the best value") {
  try {
    calibrate_to_duty_factor(0.999, SpModel::net_price(5), SynthMarketConfig{});
    FAIL("expected calibration failure");
  } catch (const CalibrationError& e) {
    CHECK(e.best_achieved() < 0.98);
    CHECK(e.best_achieved() > 0.5);
  }
  CHECK_THROWS_AS(calibrate_to_duty_factor(0.0, SpModel::lmp(0), SynthMarketConfig{}), ValidationError);
  SynthMarketConfig short_year;
  short_year.horizon = 100 * kDaySeconds;
  CHECK_THROWS_AS(calibrate_to_duty_factor(0.5, SpModel::lmp(0), short_year), ValidationError);
}
