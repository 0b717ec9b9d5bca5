#pragma once

#include <span>
#include <vector>

#include "zccloud/time_util.hpp"

namespace zcc {

struct SpInterval;

struct UpInterval {
  Timestamp start = 0;
  Timestamp end = 0;  // exclusive

  Seconds length() const { return end - start; }
  bool operator==(const UpInterval&) const = default;
};

// Uptime windows of an intermittent pool. Windows are half-open, sorted,
// disjoint and inside the horizon; touching windows are merged on
// construction, so every window end is a real shutdown.
class AvailabilitySchedule {
 public:
  AvailabilitySchedule() = default;
  // Throws ValidationError for overlapping, empty or out-of-horizon windows.
  AvailabilitySchedule(const Horizon& horizon, std::vector<UpInterval> up);

  static AvailabilitySchedule always_up(const Horizon& horizon);
  static AvailabilitySchedule always_down(const Horizon& horizon);

  const Horizon& horizon() const { return horizon_; }
  const std::vector<UpInterval>& up_intervals() const { return up_; }
  double duty_factor() const;
  Seconds uptime() const;

  bool is_up(Timestamp t) const;
  // Time left in the window containing t; 0 when t is in downtime.
  Seconds remaining_uptime(Timestamp t) const;
  // Uptime inside [from, to).
  Seconds uptime_within(Timestamp from, Timestamp to) const;

  // The same windows translated by `offset` seconds.
  AvailabilitySchedule shifted(Seconds offset) const;

  bool operator==(const AvailabilitySchedule&) const = default;

 private:
  const UpInterval* window_at(Timestamp t) const;

  Horizon horizon_;
  std::vector<UpInterval> up_;
};

// One window of round(duty_factor * period) seconds per period, opening
// `phase` seconds after each period boundary (periods counted from
// horizon.start). Windows are clipped to the horizon.
AvailabilitySchedule periodic_schedule(double duty_factor, const Horizon& horizon, Seconds period = kDaySeconds,
                                       Seconds phase = 8 * kHourSeconds);

// Uptime follows the stranded-power intervals, clipped to the horizon.
AvailabilitySchedule sp_schedule(std::span<const SpInterval> intervals, const Horizon& horizon);

}  // namespace zcc
