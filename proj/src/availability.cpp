#include "zccloud/availability.hpp"

#include <algorithm>
#include <cmath>

#include "zccloud/errors.hpp"
#include "zccloud/stranded_power.hpp"

namespace zcc {

AvailabilitySchedule::AvailabilitySchedule(const Horizon& horizon, std::vector<UpInterval> up) : horizon_(horizon) {
  if (horizon.length() <= 0) throw ValidationError("availability horizon is empty");
  std::sort(up.begin(), up.end(), [](const UpInterval& a, const UpInterval& b) { return a.start < b.start; });
  for (const UpInterval& w : up) {
    if (w.end <= w.start) throw ValidationError("empty uptime window at " + format_iso8601(w.start));
    if (w.start < horizon.start || w.end > horizon.end) {
      throw ValidationError("uptime window at " + format_iso8601(w.start) + " lies outside the horizon");
    }
    if (!up_.empty() && w.start < up_.back().end) {
      throw ValidationError("overlapping uptime windows at " + format_iso8601(w.start));
    }
    if (!up_.empty() && w.start == up_.back().end) {
      up_.back().end = w.end;
    } else {
      up_.push_back(w);
    }
  }
}

AvailabilitySchedule AvailabilitySchedule::always_up(const Horizon& horizon) {
  return AvailabilitySchedule(horizon, {{horizon.start, horizon.end}});
}

AvailabilitySchedule AvailabilitySchedule::always_down(const Horizon& horizon) {
  return AvailabilitySchedule(horizon, {});
}

Seconds AvailabilitySchedule::uptime() const {
  Seconds total = 0;
  for (const UpInterval& w : up_) total += w.length();
  return total;
}

double AvailabilitySchedule::duty_factor() const {
  if (horizon_.length() <= 0) return 0.0;
  return static_cast<double>(uptime()) / static_cast<double>(horizon_.length());
}

const UpInterval* AvailabilitySchedule::window_at(Timestamp t) const {
  auto it = std::upper_bound(up_.begin(), up_.end(), t, [](Timestamp v, const UpInterval& w) { return v < w.start; });
  if (it == up_.begin()) return nullptr;
  --it;
  return t < it->end ? &*it : nullptr;
}

bool AvailabilitySchedule::is_up(Timestamp t) const { return window_at(t) != nullptr; }

Seconds AvailabilitySchedule::remaining_uptime(Timestamp t) const {
  const UpInterval* w = window_at(t);
  return w ? w->end - t : 0;
}

Seconds AvailabilitySchedule::uptime_within(Timestamp from, Timestamp to) const {
  Seconds total = 0;
  for (const UpInterval& w : up_) {
    const Timestamp a = std::max(from, w.start);
    const Timestamp b = std::min(to, w.end);
    if (b > a) total += b - a;
  }
  return total;
}

AvailabilitySchedule AvailabilitySchedule::shifted(Seconds offset) const {
  std::vector<UpInterval> up = up_;
  for (UpInterval& w : up) {
    w.start += offset;
    w.end += offset;
  }
  return AvailabilitySchedule({horizon_.start + offset, horizon_.end + offset}, std::move(up));
}

AvailabilitySchedule periodic_schedule(double duty_factor, const Horizon& horizon, Seconds period, Seconds phase) {
  if (!(duty_factor >= 0.0 && duty_factor <= 1.0)) throw ValidationError("duty factor must lie in [0, 1]");
  if (period <= 0) throw ValidationError("period must be > 0");
  if (horizon.length() <= 0) throw ValidationError("availability horizon is empty");
  const Seconds window = static_cast<Seconds>(std::llround(duty_factor * static_cast<double>(period)));
  std::vector<UpInterval> up;
  if (window > 0) {
    phase %= period;
    if (phase < 0) phase += period;
    // Start one period early so a window wrapping past a boundary is kept.
    for (Timestamp base = horizon.start - period; base < horizon.end; base += period) {
      const Timestamp a = std::max(base + phase, horizon.start);
      const Timestamp b = std::min(base + phase + window, horizon.end);
      if (b > a) up.push_back({a, b});
    }
  }
  return AvailabilitySchedule(horizon, std::move(up));
}

AvailabilitySchedule sp_schedule(std::span<const SpInterval> intervals, const Horizon& horizon) {
  std::vector<UpInterval> up;
  up.reserve(intervals.size());
  for (const SpInterval& iv : intervals) {
    const Timestamp a = std::max(iv.start, horizon.start);
    const Timestamp b = std::min(iv.end, horizon.end);
    if (a < b) up.push_back({a, b});
  }
  return AvailabilitySchedule(horizon, std::move(up));
}

}  // namespace zcc
