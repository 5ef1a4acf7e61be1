#pragma once

#include <charconv>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

namespace freight {

namespace detail {

inline bool parse_fixed_int(std::string_view s, int& out) {
  if (s.empty()) return false;
  for (char c : s)
    if (c < '0' || c > '9') return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

} // namespace detail

// Parses "YYYY-MM-DD hh:mm:ss" local time and converts it to UTC epoch
// seconds using a fixed offset (seconds east of UTC).
inline std::optional<std::int64_t> parse_local_timestamp(std::string_view s, std::int64_t tz_offset_s) {
  if (s.size() != 19 || s[4] != '-' || s[7] != '-' || (s[10] != ' ' && s[10] != 'T') || s[13] != ':' ||
      s[16] != ':')
    return std::nullopt;
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, se = 0;
  if (!detail::parse_fixed_int(s.substr(0, 4), y) || !detail::parse_fixed_int(s.substr(5, 2), mo) ||
      !detail::parse_fixed_int(s.substr(8, 2), d) || !detail::parse_fixed_int(s.substr(11, 2), h) ||
      !detail::parse_fixed_int(s.substr(14, 2), mi) || !detail::parse_fixed_int(s.substr(17, 2), se))
    return std::nullopt;
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || se > 59) return std::nullopt;
  const auto days = sys_days{ymd}.time_since_epoch().count();
  return static_cast<std::int64_t>(days) * 86400 + h * 3600 + mi * 60 + se - tz_offset_s;
}

inline std::string format_local_timestamp(std::int64_t epoch_s, std::int64_t tz_offset_s) {
  using namespace std::chrono;
  const std::int64_t local = epoch_s + tz_offset_s;
  std::int64_t days = local / 86400;
  std::int64_t secs = local % 86400;
  if (secs < 0) {
    secs += 86400;
    days -= 1;
  }
  const year_month_day ymd{sys_days{std::chrono::days{days}}};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u %02d:%02d:%02d", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(secs / 3600), static_cast<int>((secs / 60) % 60), static_cast<int>(secs % 60));
  return buf;
}

// Local hour of day in [0, 24).
inline int local_hour(std::int64_t epoch_s, std::int64_t tz_offset_s) {
  std::int64_t s = (epoch_s + tz_offset_s) % 86400;
  if (s < 0) s += 86400;
  return static_cast<int>(s / 3600);
}

// Accepts plain seconds ("28800") or "+08:00" / "-05:30".
inline std::optional<std::int64_t> parse_tz_offset(std::string_view s) {
  if (s.empty()) return std::nullopt;
  if (s.size() == 6 && (s[0] == '+' || s[0] == '-') && s[3] == ':') {
    int h = 0, m = 0;
    if (!detail::parse_fixed_int(s.substr(1, 2), h) || !detail::parse_fixed_int(s.substr(4, 2), m) || h > 14 ||
        m > 59)
      return std::nullopt;
    const std::int64_t v = h * 3600 + m * 60;
    return s[0] == '-' ? -v : v;
  }
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  if (v < -14 * 3600 || v > 14 * 3600) return std::nullopt;
  return v;
}

} // namespace freight
