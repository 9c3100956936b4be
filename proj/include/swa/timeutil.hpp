#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace swa {

/// Seconds since 1970-01-01T00:00:00Z.
using Timestamp = std::int64_t;

inline constexpr Timestamp kSecondsPerMinute = 60;
inline constexpr Timestamp kSecondsPerHour = 3600;
inline constexpr Timestamp kSecondsPerDay = 86400;

/// Parses "YYYY-MM-DDTHH:MM:SS" with an optional trailing "Z" or "+HH:MM" /
/// "-HH:MM" offset. A space is accepted in place of 'T'. Without an offset the
/// value is taken as UTC.
std::optional<Timestamp> parse_iso8601(std::string_view text);

/// Formats as "YYYY-MM-DDTHH:MM:SSZ".
std::string format_iso8601(Timestamp t);

/// Fixed offset from UTC used to bucket timestamps into local hours/weekdays.
class UtcOffset {
public:
  UtcOffset() = default;
  explicit UtcOffset(std::int32_t seconds) : seconds_(seconds) {}

  /// Accepts "UTC", "Z", "+HH:MM", "-HH:MM", "+HH", "UTC+09:00". Throws
  /// std::invalid_argument on anything else.
  static UtcOffset parse(std::string_view text);

  std::int32_t seconds() const { return seconds_; }
  std::string to_string() const;

  /// Local hour of day, 0-23.
  int hour_of_day(Timestamp t) const;
  /// Local day of week, 0 = Monday ... 6 = Sunday.
  int day_of_week(Timestamp t) const;

  friend bool operator==(const UtcOffset&, const UtcOffset&) = default;

private:
  std::int32_t seconds_ = 0;
};

} // namespace swa
