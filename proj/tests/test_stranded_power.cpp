#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "zccloud/errors.hpp"
#include "zccloud/market_data.hpp"
#include "zccloud/stranded_power.hpp"

using namespace zcc;

namespace {

SiteSeries constant_series(std::size_t n, double lmp, double power, const std::string& id = "c") {
  SiteSeries s;
  s.site_id = id;
  s.epoch = kDefaultEpoch;
  for (std::size_t i = 0; i < n; ++i) {
    s.slots.push_back({kDefaultEpoch + static_cast<Timestamp>(i) * kSlotSeconds, lmp, power, false});
  }
  return s;
}

SpInterval span_of(Seconds start, Seconds len) {
  SpInterval iv;
  iv.start = kDefaultEpoch + start;
  iv.end = kDefaultEpoch + start + len;
  return iv;
}

void check_matches(const std::vector<SpInterval>& got, const std::vector<oracle::Run>& want, const SiteSeries& s) {
  REQUIRE(got.size() == want.size());
  for (std::size_t i = 0; i < got.size(); ++i) {
    CHECK(got[i].start == s.slots[want[i].first].t);
    CHECK(got[i].end == s.slots[want[i].last - 1].t + kSlotSeconds);
    CHECK(oracle::near(got[i].avg_power, want[i].avg_power, 1e-9));
    CHECK(oracle::near(got[i].energy, want[i].energy, 1e-9));
    CHECK(oracle::near(got[i].net_price, want[i].net_price, 1e-9));
  }
}

SynthMarketConfig site_config(std::uint64_t seed, const std::string& id) {
  SynthMarketConfig c;
  c.seed = seed;
  c.site_id = id;
  c.horizon = 60 * kDaySeconds;
  return c;
}

}  // namespace

TEST_CASE("net price is the power weighted mean") {
  const auto flat = constant_series(5, -3.0, 7.0);
  CHECK(net_price(flat.slots) == doctest::Approx(-3.0));

  std::vector<MarketSlot> two = {{0, -10.0, 1.0, false}, {300, 10.0, 3.0, false}};
  CHECK(net_price(two) == doctest::Approx(5.0));

  const auto dead = constant_series(4, -5.0, 0.0);
  CHECK_THROWS_AS(net_price(dead.slots), UndefinedValueError);
  CHECK_THROWS_AS(net_price(std::span<const MarketSlot>{}), ValidationError);
}

TEST_CASE("detect intervals on simple series") {
  CHECK(detect_intervals(constant_series(50, 50.0, 10.0), SpModel::lmp(0)).empty());

  const auto hour = constant_series(12, -1.0, 100.0);
  const auto ivs = detect_intervals(hour, SpModel::lmp(0));
  REQUIRE(ivs.size() == 1);
  CHECK(ivs[0].duration() == kHourSeconds);
  CHECK(ivs[0].avg_power == doctest::Approx(100.0));
  CHECK(ivs[0].energy == doctest::Approx(100.0));
  CHECK(ivs[0].net_price == doctest::Approx(-1.0));

  CHECK_THROWS_AS(detect_intervals(SiteSeries{}, SpModel::lmp(0)), ValidationError);
}

TEST_CASE("zero power and missing slots never hold stranded power") {
  auto s = constant_series(6, -10.0, 5.0);
  s.slots[2].power = 0.0;
  s.slots[4].missing = true;
  for (const SpModel& m : {SpModel::lmp(0), SpModel::net_price(0)}) {
    const auto ivs = detect_intervals(s, m);
    REQUIRE(ivs.size() == 3);
    CHECK(ivs[0].duration() == 2 * kSlotSeconds);
    CHECK(ivs[1].duration() == kSlotSeconds);
    CHECK(ivs[2].duration() == kSlotSeconds);
  }
}

TEST_CASE("net price rule absorbs a short spike that splits LMP runs") {
  // -20 x 3, +5 x 1, -20 x 3 at equal power: the weighted mean never reaches 0.
  auto s = constant_series(7, -20.0, 10.0);
  s.slots[3].lmp = 5.0;
  CHECK(detect_intervals(s, SpModel::lmp(0)).size() == 2);
  const auto np = detect_intervals(s, SpModel::net_price(0));
  REQUIRE(np.size() == 1);
  CHECK(np[0].duration() == 7 * kSlotSeconds);
  CHECK(np[0].net_price < 0.0);
}

TEST_CASE("LMP detection matches a brute-force run scanner on random series") {
  std::mt19937_64 rng(20240601);
  std::uniform_int_distribution<std::size_t> len(1, 10000);
  std::uniform_real_distribution<double> thr(-5.0, 10.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto s = oracle::random_series(rng, len(rng));
    const double c = trial % 4 == 0 ? 0.0 : thr(rng);
    const auto got = detect_intervals(s, SpModel::lmp(c));
    const auto want = oracle::lmp_runs(s, c);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      REQUIRE(got[i].start == s.slots[want[i].first].t);
      REQUIRE(got[i].end == s.slots[want[i].last - 1].t + kSlotSeconds);
    }
  }
}

TEST_CASE("interval payloads match oracles for both families") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 40; ++trial) {
    const auto s = oracle::random_series(rng, 1500);
    check_matches(detect_intervals(s, SpModel::lmp(2.0)), oracle::lmp_runs(s, 2.0), s);
    check_matches(detect_intervals(s, SpModel::net_price(2.0)), oracle::netprice_runs(s, 2.0), s);
  }
}

TEST_CASE("interval invariants hold on random series") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const auto s = oracle::random_series(rng, 3000);
    for (const SpModel& m : {SpModel::lmp(0), SpModel::net_price(5)}) {
      const auto ivs = detect_intervals(s, m);
      for (std::size_t i = 0; i < ivs.size(); ++i) {
        CHECK(ivs[i].end > ivs[i].start);
        CHECK(ivs[i].duration() % kSlotSeconds == 0);
        if (i > 0) CHECK(ivs[i - 1].end <= ivs[i].start);
        if (m.family == SpFamily::NetPrice) CHECK(ivs[i].net_price < m.threshold);
      }
    }
  }
}

TEST_CASE("duty factor is monotone in C and net price dominates LMP") {
  std::mt19937_64 rng(99);
  const double cs[] = {-2.0, 0.0, 1.0, 2.5, 5.0, 8.0};
  for (int trial = 0; trial < 1000; ++trial) {
    const auto s = oracle::random_series(rng, 400 + rng() % 1600);
    const Horizon h = s.horizon();
    double prev_lmp = -1.0;
    double prev_np = -1.0;
    for (double c : cs) {
      const double lmp = duty_factor(detect_intervals(s, SpModel::lmp(c)), h);
      const double np = duty_factor(detect_intervals(s, SpModel::net_price(c)), h);
      REQUIRE(lmp >= prev_lmp);
      REQUIRE(np >= prev_np);
      REQUIRE(np >= lmp);
      prev_lmp = lmp;
      prev_np = np;
    }
  }
}

TEST_CASE("duty factor edge cases") {
  const Horizon h{kDefaultEpoch, kDefaultEpoch + kDaySeconds};
  CHECK(duty_factor({}, h) == 0.0);
  const SpInterval whole = span_of(0, kDaySeconds);
  CHECK(duty_factor(std::span(&whole, 1), h) == 1.0);
  const SpInterval outside = span_of(kDaySeconds - 300, 600);
  CHECK_THROWS_AS(duty_factor(std::span(&outside, 1), h), ValidationError);
  CHECK_THROWS_AS(duty_factor({}, Horizon{5, 5}), ValidationError);
}

TEST_CASE("histogram counts and conservation") {
  const Horizon h{kDefaultEpoch, kDefaultEpoch + kDaySeconds};
  const std::vector<SpInterval> ivs = {span_of(0, 1800), span_of(3600, 2700), span_of(7200, 3 * kHourSeconds)};
  const std::vector<Seconds> edges = {kHourSeconds};
  const auto hist = interval_histogram(ivs, edges, h);
  REQUIRE(hist.counts.size() == 2);
  CHECK(hist.count_fraction[0] == doctest::Approx(2.0 / 3.0));
  CHECK(hist.count_fraction[1] == doctest::Approx(1.0 / 3.0));
  CHECK(hist.duty_contribution[1] == doctest::Approx(3.0 / 24.0));

  const std::vector<Seconds> bad = {kHourSeconds, kHourSeconds};
  CHECK_THROWS_AS(interval_histogram(ivs, bad, h), ValidationError);

  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const auto s = oracle::random_series(rng, 5000);
    const auto r = analyze_site(s, SpModel::net_price(3));
    if (r.intervals.empty()) continue;
    const double fsum = std::accumulate(r.histogram.count_fraction.begin(), r.histogram.count_fraction.end(), 0.0);
    const double dsum =
        std::accumulate(r.histogram.duty_contribution.begin(), r.histogram.duty_contribution.end(), 0.0);
    CHECK(oracle::near(fsum, 1.0, 1e-9));
    CHECK(oracle::near(dsum, r.duty_factor, 1e-9));
    CHECK(r.duty_factor >= 0.0);
    CHECK(r.duty_factor <= 1.0);
  }
}

TEST_CASE("calibrated series reproduce the interval length shape") {
  SynthMarketConfig base;
  const auto lmp_cfg = calibrate_to_duty_factor(0.21, SpModel::lmp(0), base);
  const auto lmp = analyze_site(synthesize_market(lmp_cfg), SpModel::lmp(0));
  CHECK(oracle::near(lmp.duty_factor, 0.21, 0.02));
  CHECK(lmp.histogram.count_fraction[0] >= 0.70);

  const auto np_cfg = calibrate_to_duty_factor(0.80, SpModel::net_price(5), base);
  const auto np = analyze_site(synthesize_market(np_cfg), SpModel::net_price(5));
  CHECK(oracle::near(np.duty_factor, 0.80, 0.02));
  CHECK(1.0 - np.histogram.count_fraction[0] >= 0.50);
}

TEST_CASE("site ranking tie-break, k = 0 and order independence") {
  std::vector<SpReport> reports(3);
  reports[0].site_id = "a", reports[0].duty_factor = 0.3, reports[0].total_mwh = 5;
  reports[1].site_id = "b", reports[1].duty_factor = 0.5, reports[1].total_mwh = 10;
  reports[2].site_id = "c", reports[2].duty_factor = 0.3, reports[2].total_mwh = 20;
  const std::vector<std::string> want = {"b", "c", "a"};
  CHECK(rank_sites(reports, 3) == want);
  CHECK(rank_sites(reports, 0).empty());
  CHECK_THROWS_AS(rank_sites(reports, 4), ValidationError);

  std::sort(reports.begin(), reports.end(), [](auto& x, auto& y) { return x.site_id < y.site_id; });
  do {
    CHECK(rank_sites(reports, 3) == want);
  } while (std::next_permutation(reports.begin(), reports.end(),
                                 [](auto& x, auto& y) { return x.site_id < y.site_id; }));

  std::vector<SpReport> tied(2);
  tied[0].site_id = "z";
  tied[1].site_id = "m";
  CHECK(rank_sites(tied, 2) == std::vector<std::string>{"m", "z"});
}

TEST_CASE("cumulative duty factor") {
  const auto one = synthesize_market(site_config(11, "s1"));
  const auto single = analyze_site(one, SpModel::net_price(5));
  CHECK(cumulative_duty_factor(std::span(&one, 1), SpModel::net_price(5)) == doctest::Approx(single.duty_factor));

  // 100 slots; site A stranded on [0, 30), site B on [50, 70).
  auto a = constant_series(100, 20.0, 10.0, "A");
  auto b = constant_series(100, 20.0, 10.0, "B");
  for (int i = 0; i < 30; ++i) a.slots[i].lmp = -5.0;
  for (int i = 50; i < 70; ++i) b.slots[i].lmp = -5.0;
  const std::vector<SiteSeries> pair = {a, b};
  CHECK(cumulative_duty_factor(pair, SpModel::lmp(0)) == doctest::Approx(0.5));

  auto short_one = constant_series(99, 20.0, 10.0, "S");
  const std::vector<SiteSeries> mismatched = {a, short_one};
  CHECK_THROWS_AS(cumulative_duty_factor(mismatched, SpModel::lmp(0)), ValidationError);

  std::vector<SiteSeries> seven;
  for (int k = 0; k < 7; ++k) seven.push_back(synthesize_market(site_config(100 + k, "site" + std::to_string(k))));
  const SpModel m = SpModel::net_price(0);
  double prev = 0.0;
  for (std::size_t k = 1; k <= seven.size(); ++k) {
    const std::span<const SiteSeries> top(seven.data(), k);
    const double cdf = cumulative_duty_factor(top, m);
    std::vector<std::vector<SpInterval>> per_site;
    double sum = 0.0;
    double mx = 0.0;
    for (const auto& s : top) {
      per_site.push_back(detect_intervals(s, m));
      const double df = duty_factor(per_site.back(), s.horizon());
      sum += df;
      mx = std::max(mx, df);
    }
    CHECK(oracle::near(cdf, oracle::union_fraction(per_site, kDefaultEpoch, seven[0].size()), 1e-12));
    CHECK(cdf <= sum + 1e-12);
    CHECK(cdf >= mx - 1e-12);
    CHECK(cdf >= prev);
    prev = cdf;
  }
}

TEST_CASE("average stranded power") {
  auto s = constant_series(40, 20.0, 100.0, "A");
  for (int i = 5; i < 25; ++i) s.slots[i].lmp = -1.0;
  CHECK(avg_stranded_power(std::span(&s, 1), SpModel::lmp(0)) == doctest::Approx(100.0));
  const std::vector<SiteSeries> twins = {s, s};
  CHECK(avg_stranded_power(twins, SpModel::lmp(0)) == doctest::Approx(200.0));

  const auto none = constant_series(40, 20.0, 100.0);
  CHECK_THROWS_AS(avg_stranded_power(std::span(&none, 1), SpModel::lmp(0)), UndefinedValueError);

  std::mt19937_64 rng(8);
  std::vector<SiteSeries> set;
  for (int k = 0; k < 5; ++k) set.push_back(oracle::random_series(rng, 3000, "r" + std::to_string(k)));
  for (const SpModel& m : {SpModel::lmp(1), SpModel::net_price(1)}) {
    double total = 0.0;
    std::size_t active = 0;
    std::vector<std::vector<std::uint8_t>> masks;
    for (const auto& x : set) {
      std::vector<std::uint8_t> mask(x.size(), 0);
      const auto runs = m.family == SpFamily::NetPrice ? oracle::netprice_runs(x, 1) : oracle::lmp_runs(x, 1);
      for (const auto& r : runs) std::fill(mask.begin() + r.first, mask.begin() + r.last, 1);
      masks.push_back(mask);
    }
    for (std::size_t i = 0; i < set[0].size(); ++i) {
      double slot_sum = 0.0;
      bool any = false;
      for (std::size_t k = 0; k < set.size(); ++k) {
        if (masks[k][i]) {
          slot_sum += set[k].slots[i].power;
          any = true;
        }
      }
      if (any) {
        total += slot_sum;
        ++active;
      }
    }
    CHECK(oracle::near(avg_stranded_power(set, m), total / active, 1e-9));
  }
}

TEST_CASE("storage bridging arithmetic") {
  CHECK(bridge_cost_usd(300, 4, 350) == doctest::Approx(420e6));
  CHECK(bridge_cost_usd(24, 4, 350) == doctest::Approx(33.6e6));

  const auto always = constant_series(100, -5.0, 10.0);
  const auto b = storage_to_bridge(always, SpModel::lmp(0), 4, 350);
  CHECK(b.longest_gap_hours == 0.0);
  CHECK(b.bridge_cost_usd == 0.0);

  auto gap = constant_series(100, -5.0, 10.0);
  for (int i = 10; i < 46; ++i) gap.slots[i].lmp = 30.0;
  const auto g = storage_to_bridge(gap, SpModel::lmp(0), 4, 350);
  CHECK(g.longest_gap_hours == doctest::Approx(3.0));
  CHECK(g.bridge_cost_usd == doctest::Approx(3.0 * 4 * 1000 * 350));

  CHECK_THROWS_AS(storage_to_bridge(gap, SpModel::lmp(0), 0, 350), ValidationError);
  CHECK_THROWS_AS(storage_to_bridge(gap, SpModel::lmp(0), 4, -1), ValidationError);
}

TEST_CASE("model names parse and print") {
  CHECK(SpModel::parse("NP5") == SpModel::net_price(5));
  CHECK(SpModel::parse("netprice0") == SpModel::net_price(0));
  CHECK(SpModel::parse("LMP0") == SpModel::lmp(0));
  CHECK(SpModel::parse("lmp2.5").threshold == 2.5);
  CHECK(SpModel::net_price(5).name() == "NP5");
  CHECK(SpModel::lmp(2.5).name() == "LMP2.5");
  CHECK_THROWS_AS(SpModel::parse("XYZ5"), ValidationError);
  CHECK_THROWS_AS(SpModel::parse("NP"), ValidationError);
  CHECK_THROWS_AS(SpModel::parse("NPfive"), ValidationError);
}
