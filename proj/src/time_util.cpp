#include "zccloud/time_util.hpp"

#include <charconv>
#include <cstdio>

#include "zccloud/errors.hpp"

namespace zcc {
namespace {

// Civil-calendar conversion (proleptic Gregorian), after H. Hinnant.
constexpr std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

struct Civil {
  std::int64_t y;
  unsigned m;
  unsigned d;
};

constexpr Civil civil_from_days(std::int64_t z) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp < 10 ? mp + 3 : mp - 9;
  return {y + (m <= 2), m, d};
}

static_assert(days_from_civil(1970, 1, 1) == 0);
static_assert(days_from_civil(2014, 1, 1) * 86400 == kDefaultEpoch);

bool is_leap(std::int64_t y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

unsigned days_in_month(std::int64_t y, unsigned m) {
  static constexpr unsigned kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  return m == 2 && is_leap(y) ? 29 : kDays[m - 1];
}

int read_fixed(std::string_view text, std::size_t pos, std::size_t width) {
  if (pos + width > text.size()) throw ValidationError("truncated timestamp '" + std::string(text) + "'");
  int value = 0;
  auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + width, value);
  if (ec != std::errc() || ptr != text.data() + pos + width) {
    throw ValidationError("malformed timestamp '" + std::string(text) + "'");
  }
  return value;
}

void expect(std::string_view text, std::size_t pos, char c) {
  if (pos >= text.size() || text[pos] != c) {
    throw ValidationError("malformed timestamp '" + std::string(text) + "'");
  }
}

}  // namespace

Timestamp parse_iso8601(std::string_view text) {
  const int year = read_fixed(text, 0, 4);
  expect(text, 4, '-');
  const int month = read_fixed(text, 5, 2);
  expect(text, 7, '-');
  const int day = read_fixed(text, 8, 2);
  if (text.size() <= 10 || (text[10] != 'T' && text[10] != ' ')) {
    throw ValidationError("malformed timestamp '" + std::string(text) + "'");
  }
  const int hour = read_fixed(text, 11, 2);
  expect(text, 13, ':');
  const int minute = read_fixed(text, 14, 2);
  expect(text, 16, ':');
  const int second = read_fixed(text, 17, 2);
  std::size_t pos = 19;
  if (pos < text.size() && text[pos] == '.') {
    ++pos;
    while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') ++pos;
  }
  Seconds offset = 0;
  if (pos < text.size()) {
    if (text[pos] == 'Z' && pos + 1 == text.size()) {
      ++pos;
    } else if ((text[pos] == '+' || text[pos] == '-') && pos + 6 == text.size()) {
      const int sign = text[pos] == '+' ? 1 : -1;
      const int oh = read_fixed(text, pos + 1, 2);
      expect(text, pos + 3, ':');
      const int om = read_fixed(text, pos + 4, 2);
      offset = sign * (oh * kHourSeconds + om * 60);
      pos += 6;
    } else {
      throw ValidationError("malformed timestamp '" + std::string(text) + "'");
    }
  }
  if (month < 1 || month > 12 || day < 1 ||
      day > static_cast<int>(days_in_month(year, static_cast<unsigned>(month))) || hour > 23 ||
      minute > 59 || second > 60) {
    throw ValidationError("timestamp out of range '" + std::string(text) + "'");
  }
  const std::int64_t days = days_from_civil(year, static_cast<unsigned>(month), static_cast<unsigned>(day));
  return days * kDaySeconds + hour * kHourSeconds + minute * 60 + second - offset;
}

std::string format_iso8601(Timestamp t) {
  std::int64_t days = t / kDaySeconds;
  std::int64_t rem = t % kDaySeconds;
  if (rem < 0) {
    rem += kDaySeconds;
    --days;
  }
  const Civil c = civil_from_days(days);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04lld-%02u-%02uT%02d:%02d:%02dZ", static_cast<long long>(c.y), c.m, c.d,
                static_cast<int>(rem / 3600), static_cast<int>(rem / 60 % 60), static_cast<int>(rem % 60));
  return buf;
}

}  // namespace zcc
