#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace zcc {

// Seconds since 1970-01-01T00:00:00Z.
using Timestamp = std::int64_t;
using Seconds = std::int64_t;

inline constexpr Seconds kSlotSeconds = 300;
inline constexpr Seconds kHourSeconds = 3600;
inline constexpr Seconds kDaySeconds = 86400;

// 2014-01-01T00:00:00Z, the default origin of synthetic market and workload data.
inline constexpr Timestamp kDefaultEpoch = 1388534400;

// Half-open [start, end).
struct Horizon {
  Timestamp start = 0;
  Timestamp end = 0;

  Seconds length() const { return end - start; }
  double hours() const { return static_cast<double>(length()) / kHourSeconds; }
  double days() const { return static_cast<double>(length()) / kDaySeconds; }
  bool contains(Timestamp t) const { return t >= start && t < end; }
  bool operator==(const Horizon&) const = default;
};

// Accepts "YYYY-MM-DDTHH:MM:SS" with optional fractional seconds (truncated),
// a space in place of 'T', and an optional "Z" or "+HH:MM"/"-HH:MM" offset.
// Throws ValidationError on anything else.
Timestamp parse_iso8601(std::string_view text);

// Always "YYYY-MM-DDTHH:MM:SSZ".
std::string format_iso8601(Timestamp t);

// Largest multiple of kSlotSeconds not greater than t.
constexpr Timestamp snap_to_slot(Timestamp t) {
  Timestamp r = t % kSlotSeconds;
  if (r < 0) r += kSlotSeconds;
  return t - r;
}

}  // namespace zcc
