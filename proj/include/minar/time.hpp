#pragma once

#include <chrono>
#include <cstdio>
#include <string>
#include <string_view>

#include "minar/errors.hpp"

namespace minar {

using UtcInstant = std::chrono::sys_time<std::chrono::milliseconds>;

namespace detail {

inline bool read_digits(std::string_view s, std::size_t& pos, std::size_t count, int& out) {
  if (pos + count > s.size()) return false;
  int v = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const char c = s[pos + i];
    if (c < '0' || c > '9') return false;
    v = v * 10 + (c - '0');
  }
  out = v;
  pos += count;
  return true;
}

}  // namespace detail

/// Parses `YYYY-MM-DD[T| ]HH:MM[:SS[.fff]][Z]`; `/` is accepted as the date
/// separator (ANSS exports). A bare date means midnight UTC.
inline UtcInstant parse_utc(std::string_view text) {
  using namespace std::chrono;
  std::size_t pos = 0;
  int y = 0, mo = 0, d = 0, hh = 0, mm = 0, ss = 0, ms = 0;
  auto fail = [&]() -> UtcInstant { throw ParseError("invalid UTC timestamp '" + std::string(text) + "'"); };
  if (!detail::read_digits(text, pos, 4, y)) return fail();
  if (pos >= text.size() || (text[pos] != '-' && text[pos] != '/')) return fail();
  ++pos;
  if (!detail::read_digits(text, pos, 2, mo)) return fail();
  if (pos >= text.size() || (text[pos] != '-' && text[pos] != '/')) return fail();
  ++pos;
  if (!detail::read_digits(text, pos, 2, d)) return fail();
  if (pos < text.size() && (text[pos] == 'T' || text[pos] == ' ')) {
    ++pos;
    if (!detail::read_digits(text, pos, 2, hh)) return fail();
    if (pos >= text.size() || text[pos] != ':') return fail();
    ++pos;
    if (!detail::read_digits(text, pos, 2, mm)) return fail();
    if (pos < text.size() && text[pos] == ':') {
      ++pos;
      if (!detail::read_digits(text, pos, 2, ss)) return fail();
      if (pos < text.size() && text[pos] == '.') {
        ++pos;
        int scale = 100;
        while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') {
          ms += (text[pos] - '0') * scale;
          scale /= 10;
          ++pos;
        }
      }
    }
  }
  if (pos < text.size() && text[pos] == 'Z') ++pos;
  if (pos != text.size()) return fail();
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || hh > 23 || mm > 59 || ss > 60) return fail();
  return sys_days{ymd} + hours{hh} + minutes{mm} + seconds{ss} + milliseconds{ms};
}

/// ISO-8601 `YYYY-MM-DDTHH:MM:SSZ`, with `.fff` only when milliseconds are nonzero.
inline std::string format_utc(UtcInstant t) {
  using namespace std::chrono;
  const auto day_start = floor<days>(t);
  const year_month_day ymd{day_start};
  auto rem = t - day_start;
  const auto h = duration_cast<hours>(rem);
  rem -= h;
  const auto m = duration_cast<minutes>(rem);
  rem -= m;
  const auto s = duration_cast<seconds>(rem);
  rem -= s;
  char buf[40];
  if (rem.count() != 0) {
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d.%03dZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<int>(h.count()), static_cast<int>(m.count()), static_cast<int>(s.count()),
                  static_cast<int>(rem.count()));
  } else {
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<int>(h.count()), static_cast<int>(m.count()), static_cast<int>(s.count()));
  }
  return buf;
}

}  // namespace minar
