#include "zccloud/market_data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "zccloud/errors.hpp"
#include "zccloud/random.hpp"
#include "zccloud/stranded_power.hpp"

namespace zcc {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t pos = 0;
  while (true) {
    const std::size_t comma = line.find(',', pos);
    fields.push_back(trim(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos)));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return fields;
}

double parse_number(std::string_view field, std::size_t line, const char* what) {
  double value = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  if (!field.empty() && field.front() == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (field.empty() || ec != std::errc() || ptr != last) {
    throw ParseError(line, std::string("invalid ") + what + " '" + std::string(field) + "'");
  }
  if (!std::isfinite(value)) throw ParseError(line, std::string("non-finite ") + what);
  return value;
}

struct Observation {
  Timestamp raw_t;
  double lmp;
  double power;
  bool missing;
};

void append_number(std::string& out, double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, ptr);
}

}  // namespace

std::vector<SiteSeries> parse_market_csv(std::istream& in, const ColumnMapping& schema) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string_view> header;
  std::string header_line;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    header_line = std::string(t);
    header = split_commas(header_line);
    break;
  }
  if (header.empty()) throw EmptyInputError("market CSV is empty");

  auto column = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ValidationError("market CSV is missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t c_site = column(schema.site_id);
  const std::size_t c_time = column(schema.timestamp);
  const std::size_t c_lmp = column(schema.lmp);
  const std::size_t c_power = column(schema.power);
  const std::size_t needed = std::max({c_site, c_time, c_lmp, c_power}) + 1;

  std::map<std::string, std::vector<Observation>> by_site;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto fields = split_commas(t);
    if (fields.size() < needed) throw ParseError(line_no, "expected at least " + std::to_string(needed) + " fields");
    const std::string site(fields[c_site]);
    if (site.empty()) throw ParseError(line_no, "empty site_id");
    Timestamp ts = 0;
    try {
      ts = parse_iso8601(fields[c_time]);
    } catch (const ValidationError& e) {
      throw ParseError(line_no, e.what());
    }
    Observation obs{ts, 0.0, 0.0, false};
    if (fields[c_lmp].empty() && fields[c_power].empty()) {
      obs.missing = true;
    } else {
      obs.lmp = parse_number(fields[c_lmp], line_no, "lmp");
      obs.power = parse_number(fields[c_power], line_no, "power");
      if (obs.power < 0.0) throw ParseError(line_no, "negative power");
    }
    by_site[site].push_back(obs);
    ++rows;
  }
  if (rows == 0) throw EmptyInputError("market CSV has a header but no rows");

  std::vector<SiteSeries> out;
  out.reserve(by_site.size());
  for (auto& [site, obs] : by_site) {
    std::stable_sort(obs.begin(), obs.end(),
                     [](const Observation& a, const Observation& b) { return a.raw_t < b.raw_t; });
    for (std::size_t i = 1; i < obs.size(); ++i) {
      if (obs[i].raw_t == obs[i - 1].raw_t) {
        throw ValidationError("duplicate slot for site '" + site + "' at " + format_iso8601(obs[i].raw_t));
      }
    }
    SiteSeries series;
    series.site_id = site;
    series.epoch = snap_to_slot(obs.front().raw_t);
    const Timestamp last = snap_to_slot(obs.back().raw_t);
    const std::size_t n = static_cast<std::size_t>((last - series.epoch) / kSlotSeconds) + 1;
    series.slots.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      series.slots[i] = MarketSlot{series.epoch + static_cast<Seconds>(i) * kSlotSeconds, 0.0, 0.0, true};
    }
    for (const Observation& o : obs) {
      MarketSlot& slot = series.slots[static_cast<std::size_t>((snap_to_slot(o.raw_t) - series.epoch) / kSlotSeconds)];
      slot.lmp = o.lmp;
      slot.power = o.power;
      slot.missing = o.missing;
    }
    out.push_back(std::move(series));
  }
  return out;
}

std::vector<SiteSeries> ingest_csv(const std::filesystem::path& path, const ColumnMapping& schema) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open market file '" + path.string() + "'");
  return parse_market_csv(in, schema);
}

void export_csv(std::ostream& out, std::span<const SiteSeries> series) {
  out << "site_id,timestamp_utc,lmp_usd_per_mwh,power_mw\n";
  std::string row;
  for (const SiteSeries& s : series) {
    for (const MarketSlot& slot : s.slots) {
      row.clear();
      row += s.site_id;
      row += ',';
      row += format_iso8601(slot.t);
      row += ',';
      if (!slot.missing) {
        append_number(row, slot.lmp);
        row += ',';
        append_number(row, slot.power);
      } else {
        row += ',';
      }
      row += '\n';
      out << row;
    }
  }
}

void export_csv(const std::filesystem::path& path, std::span<const SiteSeries> series) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write '" + path.string() + "'");
  export_csv(out, series);
}

void validate(const SynthMarketConfig& c) {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("synthetic market config: ") + what);
  };
  require(c.horizon >= kDaySeconds, "horizon must be at least one day");
  require(c.epoch % kSlotSeconds == 0, "epoch must lie on the 5-minute grid");
  require(std::isfinite(c.mean_power_mw) && c.mean_power_mw > 0.0, "mean_power_mw must be > 0");
  require(std::isfinite(c.power_volatility) && c.power_volatility >= 0.0, "power_volatility must be >= 0");
  require(c.power_persistence >= 0.0 && c.power_persistence < 1.0, "power_persistence must be in [0, 1)");
  require(std::isfinite(c.episode_rate_per_day) && c.episode_rate_per_day >= 0.0,
          "episode_rate_per_day must be >= 0");
  require(std::isfinite(c.episode_mean_hours) && c.episode_mean_hours > 0.0, "episode_mean_hours must be > 0");
  require(std::isfinite(c.episode_duration_cv) && c.episode_duration_cv >= 0.0, "episode_duration_cv must be >= 0");
  require(std::isfinite(c.episode_price_mean), "episode_price_mean must be finite");
  require(std::isfinite(c.episode_price_sd) && c.episode_price_sd >= 0.0, "episode_price_sd must be >= 0");
  require(c.episode_recovery_prob >= 0.0 && c.episode_recovery_prob < 1.0,
          "episode_recovery_prob must be in [0, 1)");
  require(std::isfinite(c.base_price_mean) && std::isfinite(c.base_price_floor), "base price must be finite");
  require(std::isfinite(c.base_price_sd) && c.base_price_sd >= 0.0, "base_price_sd must be >= 0");
  require(std::isfinite(c.calm_rate_per_day) && c.calm_rate_per_day >= 0.0, "calm_rate_per_day must be >= 0");
  require(std::isfinite(c.calm_mean_hours) && c.calm_mean_hours > 0.0, "calm_mean_hours must be > 0");
}

SiteSeries synthesize_market(const SynthMarketConfig& c) {
  validate(c);
  const std::size_t n = static_cast<std::size_t>(c.horizon / kSlotSeconds);
  constexpr double kSlotsPerHour = static_cast<double>(kHourSeconds) / kSlotSeconds;

  // Per-slot state, filled by the renewal processes.
  std::vector<std::uint8_t> episode(n, 0);
  std::vector<std::uint8_t> calm(n, 0);

  // Gap and duration draws come from separate engines so that changing the
  // episode rate rescales the same underlying sequence (common random
  // numbers), which keeps calibration searches smooth.
  Rng gap_rng(c.seed ^ 0x6761707300000001ULL);
  Rng duration_rng(c.seed ^ 0x6475726100000002ULL);
  const auto duration_law = LogNormalParams::from_moments(c.episode_mean_hours,
                                                          c.episode_duration_cv * c.episode_mean_hours);
  std::size_t pos = 0;
  while (pos < n && c.episode_rate_per_day > 0.0) {
    const double gap_hours = gap_rng.exponential(1.0) * 24.0 / c.episode_rate_per_day;
    pos += std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(gap_hours * kSlotsPerHour)));
    const double ep_hours = duration_law.sample(duration_rng.normal());
    const std::size_t len = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(ep_hours * kSlotsPerHour)));
    for (std::size_t i = pos; i < std::min(n, pos + len); ++i) episode[i] = 1;
    pos += len;
  }

  if (c.calm_rate_per_day > 0.0) {
    Rng calm_rng(c.seed ^ 0x63616c6d00000003ULL);
    std::size_t cpos = 0;
    while (cpos < n) {
      cpos += static_cast<std::size_t>(std::llround(calm_rng.exponential(24.0 / c.calm_rate_per_day) * kSlotsPerHour));
      const std::size_t len = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::llround(calm_rng.exponential(c.calm_mean_hours) * kSlotsPerHour)));
      for (std::size_t i = cpos; i < std::min(n, cpos + len); ++i) calm[i] = 1;
      cpos += len;
    }
  }

  enum Stream : std::uint64_t { kRecovery = 11, kEpisodePrice = 12, kBasePrice = 13, kPowerNoise = 14 };
  SiteSeries series;
  series.site_id = c.site_id;
  series.epoch = c.epoch;
  series.slots.resize(n);
  const double phi = c.power_persistence;
  const double innovation = std::sqrt(1.0 - phi * phi);
  const double sigma = c.power_volatility;
  double z = hashed_normal(c.seed, kPowerNoise, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) z = phi * z + innovation * hashed_normal(c.seed, kPowerNoise, i);
    const double base = std::max(c.base_price_floor, c.base_price_mean + c.base_price_sd * hashed_normal(c.seed, kBasePrice, i));
    MarketSlot& slot = series.slots[i];
    slot.t = c.epoch + static_cast<Seconds>(i) * kSlotSeconds;
    if (calm[i]) {
      slot.lmp = base;
      slot.power = 0.0;
      continue;
    }
    if (episode[i] && hashed_uniform(c.seed, kRecovery, i) >= c.episode_recovery_prob) {
      slot.lmp = c.episode_price_mean + c.episode_price_sd * hashed_normal(c.seed, kEpisodePrice, i);
    } else {
      slot.lmp = base;
    }
    slot.power = c.mean_power_mw * std::exp(sigma * z - 0.5 * sigma * sigma);
  }
  return series;
}

SynthMarketConfig calibrate_to_duty_factor(double target_df, const SpModel& model, const SynthMarketConfig& base,
                                           const CalibrationOptions& options) {
  if (!(target_df > 0.0 && target_df < 1.0)) throw ValidationError("target duty factor must lie in (0, 1)");
  if (base.horizon < 365 * kDaySeconds) throw ValidationError("calibration needs at least one simulated year");
  validate(base);

  auto measure = [&](double rate) {
    SynthMarketConfig c = base;
    c.episode_rate_per_day = rate;
    const SiteSeries s = synthesize_market(c);
    return duty_factor(detect_intervals(s, model), s.horizon());
  };

  double lo = std::log(options.min_rate_per_day);
  double hi = std::log(options.max_rate_per_day);
  const double lo_df = measure(std::exp(lo));
  const double hi_df = measure(std::exp(hi));
  if (target_df > std::max(lo_df, hi_df) + options.tolerance ||
      target_df < std::min(lo_df, hi_df) - options.tolerance) {
    const double nearest = target_df > hi_df ? std::max(lo_df, hi_df) : std::min(lo_df, hi_df);
    throw CalibrationError("duty factor " + std::to_string(target_df) + " is not reachable under " + model.name(),
                           nearest);
  }
  double best_rate = std::exp(lo);
  double best_df = lo_df;
  double best_err = std::abs(lo_df - target_df);
  if (std::abs(hi_df - target_df) < best_err) {
    best_rate = std::exp(hi);
    best_df = hi_df;
    best_err = std::abs(hi_df - target_df);
  }
  for (int it = 0; it < options.max_iterations && best_err > options.tolerance / 4.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double df = measure(std::exp(mid));
    const double err = std::abs(df - target_df);
    if (err < best_err) {
      best_err = err;
      best_df = df;
      best_rate = std::exp(mid);
    }
    if (df < target_df) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  if (best_err > options.tolerance) {
    throw CalibrationError("could not reach duty factor " + std::to_string(target_df) + " under " + model.name(),
                           best_df);
  }
  SynthMarketConfig out = base;
  out.episode_rate_per_day = best_rate;
  return out;
}

}  // namespace zcc
