#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "zccloud/time_util.hpp"

namespace zcc {

struct SpModel;

// One 5-minute market observation for a generation site.
struct MarketSlot {
  Timestamp t = 0;
  double lmp = 0.0;    // $/MWh, may be negative
  double power = 0.0;  // offered generation, MW
  bool missing = false;

  bool operator==(const MarketSlot&) const = default;
};

// Dense per-site history: slots[i].t == epoch + i * kSlotSeconds. Gaps in the
// source data are kept as missing slots rather than interpolated.
struct SiteSeries {
  std::string site_id;
  Timestamp epoch = 0;
  std::vector<MarketSlot> slots;

  std::size_t size() const { return slots.size(); }
  bool empty() const { return slots.empty(); }
  Horizon horizon() const {
    return {epoch, epoch + static_cast<Seconds>(slots.size()) * kSlotSeconds};
  }
  bool operator==(const SiteSeries&) const = default;
};

struct ColumnMapping {
  std::string site_id = "site_id";
  std::string timestamp = "timestamp_utc";
  std::string lmp = "lmp_usd_per_mwh";
  std::string power = "power_mw";
};

// Rows may arrive in any order. Every timestamp is floored to its 5-minute
// slot; when several observations land in one slot the latest one wins.
// A row with empty lmp and power fields marks the slot as missing. Exact
// repeats of a (site, timestamp) pair are rejected. Series come back sorted
// by site id.
std::vector<SiteSeries> parse_market_csv(std::istream& in, const ColumnMapping& schema = {});
std::vector<SiteSeries> ingest_csv(const std::filesystem::path& path, const ColumnMapping& schema = {});

void export_csv(std::ostream& out, std::span<const SiteSeries> series);
void export_csv(const std::filesystem::path& path, std::span<const SiteSeries> series);

// Two-state renewal process for negative-price episodes, with an overlaid
// calm process (no wind, zero power) that guarantees SP-free stretches.
//
// Normal-state sojourns are exponential with mean 24 / episode_rate_per_day
// hours, so the rate is the episode hazard per day of normal operation.
// Episode lengths are log-normal. Inside an episode each slot either
// recovers to a base-price draw (episode_recovery_prob) or draws from the
// episode price distribution; at 5-minute resolution this produces the
// brief positive spikes that fragment LMP-threshold runs.
struct SynthMarketConfig {
  std::string site_id = "synthetic-wind";
  Timestamp epoch = kDefaultEpoch;
  Seconds horizon = 365 * kDaySeconds;

  double mean_power_mw = 100.0;
  double power_volatility = 0.35;    // stationary sd of log power
  double power_persistence = 0.98;   // AR(1) coefficient per slot

  double episode_rate_per_day = 1.0;
  double episode_mean_hours = 12.0;
  double episode_duration_cv = 1.2;
  double episode_price_mean = -20.0;
  double episode_price_sd = 8.0;
  double episode_recovery_prob = 0.2;

  double base_price_mean = 30.0;
  double base_price_sd = 12.0;
  double base_price_floor = 8.0;

  double calm_rate_per_day = 1.0 / 30.0;
  double calm_mean_hours = 60.0;

  std::uint64_t seed = 1;

  bool operator==(const SynthMarketConfig&) const = default;
};

void validate(const SynthMarketConfig& config);

SiteSeries synthesize_market(const SynthMarketConfig& config);

struct CalibrationOptions {
  double tolerance = 0.02;
  int max_iterations = 40;
  double min_rate_per_day = 0.01;
  double max_rate_per_day = 100.0;
};

// Bisection on the episode rate (log scale) until the synthesized series
// measures target_df under `model`. Throws CalibrationError with the best
// value reached when the bounded search cannot get within tolerance.
SynthMarketConfig calibrate_to_duty_factor(double target_df, const SpModel& model,
                                           const SynthMarketConfig& base,
                                           const CalibrationOptions& options = {});

}  // namespace zcc
