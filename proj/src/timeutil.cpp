#include "swa/timeutil.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>
#include <stdexcept>

namespace swa {

namespace {

bool read_int(std::string_view text, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > text.size()) return false;
  for (std::size_t i = pos; i < pos + len; ++i)
    if (text[i] < '0' || text[i] > '9') return false;
  auto res = std::from_chars(text.data() + pos, text.data() + pos + len, out);
  return res.ec == std::errc{};
}

Timestamp floor_div(Timestamp a, Timestamp b) {
  Timestamp q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

// Parses "+HH:MM", "-HH:MM", "+HHMM" or "+HH"; returns signed seconds.
std::optional<std::int32_t> parse_offset(std::string_view s) {
  if (s.empty() || (s[0] != '+' && s[0] != '-')) return std::nullopt;
  const int sign = s[0] == '-' ? -1 : 1;
  int hh = 0, mm = 0;
  if (!read_int(s, 1, 2, hh)) return std::nullopt;
  if (s.size() == 3) {
    // hours only
  } else if (s.size() == 6 && s[3] == ':') {
    if (!read_int(s, 4, 2, mm)) return std::nullopt;
  } else if (s.size() == 5) {
    if (!read_int(s, 3, 2, mm)) return std::nullopt;
  } else {
    return std::nullopt;
  }
  if (hh > 14 || mm > 59) return std::nullopt;
  return sign * (hh * 3600 + mm * 60);
}

} // namespace

std::optional<Timestamp> parse_iso8601(std::string_view text) {
  // YYYY-MM-DDTHH:MM:SS
  if (text.size() < 19) return std::nullopt;
  int y, mo, d, h, mi, s;
  if (!read_int(text, 0, 4, y) || text[4] != '-' || !read_int(text, 5, 2, mo) ||
      text[7] != '-' || !read_int(text, 8, 2, d) ||
      (text[10] != 'T' && text[10] != ' ') || !read_int(text, 11, 2, h) ||
      text[13] != ':' || !read_int(text, 14, 2, mi) || text[16] != ':' ||
      !read_int(text, 17, 2, s))
    return std::nullopt;
  if (h > 23 || mi > 59 || s > 60) return std::nullopt;

  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                           day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;

  std::string_view rest = text.substr(19);
  // Fractional seconds are truncated.
  if (!rest.empty() && rest[0] == '.') {
    std::size_t i = 1;
    while (i < rest.size() && rest[i] >= '0' && rest[i] <= '9') ++i;
    if (i == 1) return std::nullopt;
    rest = rest.substr(i);
  }
  std::int32_t offset = 0;
  if (rest == "Z" || rest.empty()) {
    offset = 0;
  } else if (auto off = parse_offset(rest)) {
    offset = *off;
  } else {
    return std::nullopt;
  }

  const Timestamp days_since_epoch = sys_days{ymd}.time_since_epoch().count();
  return days_since_epoch * kSecondsPerDay + h * kSecondsPerHour +
         mi * kSecondsPerMinute + s - offset;
}

std::string format_iso8601(Timestamp t) {
  using namespace std::chrono;
  const Timestamp days_since_epoch = floor_div(t, kSecondsPerDay);
  const Timestamp secs = t - days_since_epoch * kSecondsPerDay;
  const year_month_day ymd{sys_days{days{days_since_epoch}}};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", int(ymd.year()),
                unsigned(ymd.month()), unsigned(ymd.day()), int(secs / 3600),
                int(secs / 60 % 60), int(secs % 60));
  return buf;
}

UtcOffset UtcOffset::parse(std::string_view text) {
  if (text == "UTC" || text == "Z" || text == "utc" || text == "GMT")
    return UtcOffset{0};
  std::string_view body = text;
  if (body.substr(0, 3) == "UTC" || body.substr(0, 3) == "GMT") body = body.substr(3);
  if (auto off = parse_offset(body)) return UtcOffset{*off};
  throw std::invalid_argument("unsupported timezone '" + std::string(text) +
                              "' (expected UTC or a fixed offset like +09:00)");
}

std::string UtcOffset::to_string() const {
  if (seconds_ == 0) return "UTC";
  const int a = seconds_ < 0 ? -seconds_ : seconds_;
  char buf[16];
  std::snprintf(buf, sizeof buf, "%c%02d:%02d", seconds_ < 0 ? '-' : '+', a / 3600,
                a / 60 % 60);
  return buf;
}

int UtcOffset::hour_of_day(Timestamp t) const {
  const Timestamp local = t + seconds_;
  const Timestamp secs = local - floor_div(local, kSecondsPerDay) * kSecondsPerDay;
  return static_cast<int>(secs / kSecondsPerHour);
}

int UtcOffset::day_of_week(Timestamp t) const {
  const Timestamp days = floor_div(t + seconds_, kSecondsPerDay);
  // 1970-01-01 was a Thursday (index 3 with Monday = 0).
  Timestamp dow = (days + 3) % 7;
  if (dow < 0) dow += 7;
  return static_cast<int>(dow);
}

} // namespace swa
