#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "zccloud/market_data.hpp"
#include "zccloud/time_util.hpp"

namespace zcc {

enum class SpFamily { InstantaneousLMP, NetPrice };

struct SpModel {
  SpFamily family = SpFamily::InstantaneousLMP;
  double threshold = 0.0;  // $/MWh

  static SpModel lmp(double c) { return {SpFamily::InstantaneousLMP, c}; }
  static SpModel net_price(double c) { return {SpFamily::NetPrice, c}; }

  // "LMP0", "LMP5", "NP0", "NetPrice5", case-insensitive.
  static SpModel parse(std::string_view name);
  // Short form: "LMP5", "NP0". Fractional thresholds keep their decimals.
  std::string name() const;

  bool operator==(const SpModel&) const = default;
};

struct SpInterval {
  std::string site_id;
  Timestamp start = 0;
  Timestamp end = 0;  // exclusive
  double avg_power = 0.0;  // MW
  double energy = 0.0;     // MWh
  double net_price = 0.0;  // $/MWh, power-weighted

  Seconds duration() const { return end - start; }
  bool operator==(const SpInterval&) const = default;
};

struct IntervalHistogram {
  // Bucket i covers [edges[i-1], edges[i]); bucket 0 starts at 0 and the last
  // bucket is open-ended, so there are edges.size() + 1 buckets.
  std::vector<Seconds> edges;
  std::vector<std::size_t> counts;
  std::vector<double> count_fraction;
  std::vector<double> duty_contribution;
};

struct SpReport {
  SpModel model;
  std::string site_id;
  Horizon horizon;
  double duty_factor = 0.0;
  std::vector<SpInterval> intervals;
  double avg_stranded_mw = 0.0;
  double total_mwh = 0.0;  // annualized to 365 days
  IntervalHistogram histogram;
};

struct StorageBridge {
  double longest_gap_hours = 0.0;
  double bridge_cost_usd = 0.0;
};

// Power-weighted mean LMP. Throws UndefinedValueError when total power is 0.
double net_price(std::span<const MarketSlot> slots);

std::vector<SpInterval> detect_intervals(const SiteSeries& series, const SpModel& model);

// One flag per slot: 1 inside an SP interval.
std::vector<std::uint8_t> sp_mask(const SiteSeries& series, const SpModel& model);

double duty_factor(std::span<const SpInterval> intervals, const Horizon& horizon);

std::vector<Seconds> default_bucket_edges();

IntervalHistogram interval_histogram(std::span<const SpInterval> intervals, std::span<const Seconds> edges,
                                     const Horizon& horizon);

SpReport analyze_site(const SiteSeries& series, const SpModel& model,
                      std::span<const Seconds> edges = {});

// Duty factor descending, then total_mwh descending, then site id ascending.
std::vector<std::string> rank_sites(std::span<const SpReport> reports, std::size_t k);

double cumulative_duty_factor(std::span<const SiteSeries> series_set, const SpModel& model);

// Mean, over slots where at least one site is stranded, of the summed
// stranded MW across sites.
double avg_stranded_power(std::span<const SiteSeries> series_set, const SpModel& model);

double bridge_cost_usd(double gap_hours, double load_mw, double battery_usd_per_kwh);

StorageBridge storage_to_bridge(const SiteSeries& series, const SpModel& model, double load_mw,
                                double battery_usd_per_kwh);

}  // namespace zcc
