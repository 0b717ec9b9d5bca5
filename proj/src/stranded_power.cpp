#include "zccloud/stranded_power.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>

#include "zccloud/errors.hpp"

namespace zcc {
namespace {

constexpr double kSlotHours = static_cast<double>(kSlotSeconds) / kHourSeconds;

bool can_hold_power(const MarketSlot& s) { return !s.missing && s.power > 0.0; }

SpInterval make_interval(const SiteSeries& series, std::size_t first, std::size_t last, double sum_lp,
                         double sum_p) {
  SpInterval iv;
  iv.site_id = series.site_id;
  iv.start = series.slots[first].t;
  iv.end = series.slots[last - 1].t + kSlotSeconds;
  iv.avg_power = sum_p / static_cast<double>(last - first);
  iv.energy = sum_p * kSlotHours;
  iv.net_price = sum_lp / sum_p;
  return iv;
}

void require_shared_grid(std::span<const SiteSeries> set) {
  if (set.empty()) throw ValidationError("empty site set");
  for (const SiteSeries& s : set) {
    if (s.epoch != set.front().epoch || s.size() != set.front().size()) {
      throw ValidationError("site '" + s.site_id + "' does not share the horizon of '" + set.front().site_id + "'");
    }
  }
}

}  // namespace

SpModel SpModel::parse(std::string_view name) {
  std::string upper;
  for (char ch : name) upper += static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  SpFamily family;
  std::string_view rest;
  auto starts = [&](std::string_view p) { return upper.rfind(p, 0) == 0; };
  if (starts("NETPRICE")) {
    family = SpFamily::NetPrice;
    rest = std::string_view(upper).substr(8);
  } else if (starts("NP")) {
    family = SpFamily::NetPrice;
    rest = std::string_view(upper).substr(2);
  } else if (starts("LMP")) {
    family = SpFamily::InstantaneousLMP;
    rest = std::string_view(upper).substr(3);
  } else {
    throw ValidationError("unknown stranded-power model '" + std::string(name) + "'");
  }
  double c = 0.0;
  auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), c);
  if (rest.empty() || ec != std::errc() || ptr != rest.data() + rest.size() || !std::isfinite(c)) {
    throw ValidationError("bad threshold in stranded-power model '" + std::string(name) + "'");
  }
  return {family, c};
}

std::string SpModel::name() const {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, threshold);
  return (family == SpFamily::NetPrice ? "NP" : "LMP") + std::string(buf, ptr);
}

double net_price(std::span<const MarketSlot> slots) {
  if (slots.empty()) throw ValidationError("net price of an empty slice");
  double lp = 0.0;
  double p = 0.0;
  for (const MarketSlot& s : slots) {
    if (s.missing) continue;
    lp += s.lmp * s.power;
    p += s.power;
  }
  if (!(p > 0.0)) throw UndefinedValueError("net price undefined: total power is zero");
  return lp / p;
}

std::vector<SpInterval> detect_intervals(const SiteSeries& series, const SpModel& model) {
  if (series.empty()) throw ValidationError("series '" + series.site_id + "' is empty");
  if (!std::isfinite(model.threshold)) throw ValidationError("threshold must be finite");
  const auto& slots = series.slots;
  const std::size_t n = slots.size();
  const double c = model.threshold;
  std::vector<SpInterval> out;

  std::size_t i = 0;
  while (i < n) {
    if (!(can_hold_power(slots[i]) && slots[i].lmp < c)) {
      ++i;
      continue;
    }
    double sum_lp = slots[i].lmp * slots[i].power;
    double sum_p = slots[i].power;
    std::size_t j = i + 1;
    if (model.family == SpFamily::InstantaneousLMP) {
      while (j < n && can_hold_power(slots[j]) && slots[j].lmp < c) {
        sum_lp += slots[j].lmp * slots[j].power;
        sum_p += slots[j].power;
        ++j;
      }
    } else {
      // Greedy extension: admit the next slot while the running
      // power-weighted price stays below the threshold.
      while (j < n && can_hold_power(slots[j])) {
        const double lp = sum_lp + slots[j].lmp * slots[j].power;
        const double p = sum_p + slots[j].power;
        if (!(lp < c * p)) break;
        sum_lp = lp;
        sum_p = p;
        ++j;
      }
    }
    out.push_back(make_interval(series, i, j, sum_lp, sum_p));
    i = j;
  }
  return out;
}

std::vector<std::uint8_t> sp_mask(const SiteSeries& series, const SpModel& model) {
  std::vector<std::uint8_t> mask(series.size(), 0);
  for (const SpInterval& iv : detect_intervals(series, model)) {
    const auto first = static_cast<std::size_t>((iv.start - series.epoch) / kSlotSeconds);
    const auto last = static_cast<std::size_t>((iv.end - series.epoch) / kSlotSeconds);
    std::fill(mask.begin() + static_cast<std::ptrdiff_t>(first), mask.begin() + static_cast<std::ptrdiff_t>(last), 1);
  }
  return mask;
}

double duty_factor(std::span<const SpInterval> intervals, const Horizon& horizon) {
  if (horizon.length() <= 0) throw ValidationError("empty horizon");
  Seconds covered = 0;
  for (const SpInterval& iv : intervals) {
    if (iv.start < horizon.start || iv.end > horizon.end || iv.end <= iv.start) {
      throw ValidationError("interval [" + format_iso8601(iv.start) + ", " + format_iso8601(iv.end) +
                            ") lies outside the horizon");
    }
    covered += iv.duration();
  }
  return static_cast<double>(covered) / static_cast<double>(horizon.length());
}

std::vector<Seconds> default_bucket_edges() {
  return {1 * kHourSeconds, 5 * kHourSeconds, 10 * kHourSeconds, 50 * kHourSeconds, 100 * kHourSeconds};
}

IntervalHistogram interval_histogram(std::span<const SpInterval> intervals, std::span<const Seconds> edges,
                                     const Horizon& horizon) {
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (edges[i] <= edges[i - 1]) throw ValidationError("bucket edges must be strictly increasing");
  }
  IntervalHistogram h;
  h.edges.assign(edges.begin(), edges.end());
  const std::size_t buckets = edges.size() + 1;
  h.counts.assign(buckets, 0);
  h.count_fraction.assign(buckets, 0.0);
  h.duty_contribution.assign(buckets, 0.0);
  std::vector<Seconds> covered(buckets, 0);
  for (const SpInterval& iv : intervals) {
    const auto b = static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), iv.duration()) - edges.begin());
    ++h.counts[b];
    covered[b] += iv.duration();
  }
  const double total = static_cast<double>(intervals.size());
  for (std::size_t b = 0; b < buckets; ++b) {
    if (total > 0) h.count_fraction[b] = static_cast<double>(h.counts[b]) / total;
    h.duty_contribution[b] = static_cast<double>(covered[b]) / static_cast<double>(horizon.length());
  }
  return h;
}

SpReport analyze_site(const SiteSeries& series, const SpModel& model, std::span<const Seconds> edges) {
  SpReport r;
  r.model = model;
  r.site_id = series.site_id;
  r.horizon = series.horizon();
  r.intervals = detect_intervals(series, model);
  r.duty_factor = duty_factor(r.intervals, r.horizon);
  double energy = 0.0;
  Seconds covered = 0;
  for (const SpInterval& iv : r.intervals) {
    energy += iv.energy;
    covered += iv.duration();
  }
  r.avg_stranded_mw = covered > 0 ? energy / (static_cast<double>(covered) / kHourSeconds) : 0.0;
  r.total_mwh = energy * (365.0 * kDaySeconds) / static_cast<double>(r.horizon.length());
  const std::vector<Seconds> defaults = default_bucket_edges();
  r.histogram = interval_histogram(r.intervals, edges.empty() ? std::span<const Seconds>(defaults) : edges, r.horizon);
  return r;
}

std::vector<std::string> rank_sites(std::span<const SpReport> reports, std::size_t k) {
  if (k > reports.size()) {
    throw ValidationError("cannot rank top " + std::to_string(k) + " of " + std::to_string(reports.size()) + " sites");
  }
  std::vector<const SpReport*> order;
  for (const SpReport& r : reports) order.push_back(&r);
  std::sort(order.begin(), order.end(), [](const SpReport* a, const SpReport* b) {
    if (a->duty_factor != b->duty_factor) return a->duty_factor > b->duty_factor;
    if (a->total_mwh != b->total_mwh) return a->total_mwh > b->total_mwh;
    return a->site_id < b->site_id;
  });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back(order[i]->site_id);
  return out;
}

double cumulative_duty_factor(std::span<const SiteSeries> series_set, const SpModel& model) {
  require_shared_grid(series_set);
  std::vector<std::uint8_t> any(series_set.front().size(), 0);
  for (const SiteSeries& s : series_set) {
    const auto mask = sp_mask(s, model);
    for (std::size_t i = 0; i < any.size(); ++i) any[i] |= mask[i];
  }
  const auto hits = std::count(any.begin(), any.end(), std::uint8_t{1});
  return static_cast<double>(hits) / static_cast<double>(any.size());
}

double avg_stranded_power(std::span<const SiteSeries> series_set, const SpModel& model) {
  require_shared_grid(series_set);
  const std::size_t n = series_set.front().size();
  std::vector<double> summed(n, 0.0);
  std::vector<std::uint8_t> any(n, 0);
  for (const SiteSeries& s : series_set) {
    const auto mask = sp_mask(s, model);
    for (std::size_t i = 0; i < n; ++i) {
      if (mask[i]) {
        summed[i] += s.slots[i].power;
        any[i] = 1;
      }
    }
  }
  double total = 0.0;
  std::size_t active = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (any[i]) {
      total += summed[i];
      ++active;
    }
  }
  if (active == 0) throw UndefinedValueError("no stranded-power slots in the site set");
  return total / static_cast<double>(active);
}

double bridge_cost_usd(double gap_hours, double load_mw, double battery_usd_per_kwh) {
  return gap_hours * load_mw * 1000.0 * battery_usd_per_kwh;
}

StorageBridge storage_to_bridge(const SiteSeries& series, const SpModel& model, double load_mw,
                                double battery_usd_per_kwh) {
  if (!(load_mw > 0.0)) throw ValidationError("load_mw must be > 0");
  if (!(battery_usd_per_kwh > 0.0)) throw ValidationError("battery price must be > 0");
  const auto mask = sp_mask(series, model);
  std::size_t longest = 0;
  std::size_t run = 0;
  for (std::uint8_t m : mask) {
    run = m ? 0 : run + 1;
    longest = std::max(longest, run);
  }
  StorageBridge out;
  out.longest_gap_hours = static_cast<double>(longest) * kSlotHours;
  out.bridge_cost_usd = bridge_cost_usd(out.longest_gap_hours, load_mw, battery_usd_per_kwh);
  return out;
}

}  // namespace zcc
