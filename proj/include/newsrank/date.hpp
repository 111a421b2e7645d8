#pragma once

#include <chrono>
#include <compare>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

#include "newsrank/errors.hpp"

namespace newsrank {

/// A calendar day. Intraday precision is deliberately unsupported; all
/// corpus timestamps are reduced to whole days.
class Date {
 public:
  Date() = default;
  Date(int year, unsigned month, unsigned day) {
    std::chrono::year_month_day ymd{std::chrono::year{year},
                                    std::chrono::month{month},
                                    std::chrono::day{day}};
    if (!ymd.ok()) {
      throw DataError("invalid date: " + std::to_string(year) + "-" +
                      std::to_string(month) + "-" + std::to_string(day));
    }
    days_ = std::chrono::sys_days{ymd};
  }

  /// Parses "YYYY-MM-DD". Longer strings are accepted if the first ten
  /// characters form a valid date (covers ISO timestamps).
  static std::optional<Date> try_parse(std::string_view s) {
    if (s.size() < 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
    auto digits = [](std::string_view part) -> std::optional<int> {
      int v = 0;
      for (char c : part) {
        if (c < '0' || c > '9') return std::nullopt;
        v = v * 10 + (c - '0');
      }
      return v;
    };
    auto y = digits(s.substr(0, 4));
    auto m = digits(s.substr(5, 2));
    auto d = digits(s.substr(8, 2));
    if (!y || !m || !d) return std::nullopt;
    std::chrono::year_month_day ymd{std::chrono::year{*y},
                                    std::chrono::month{unsigned(*m)},
                                    std::chrono::day{unsigned(*d)}};
    if (!ymd.ok()) return std::nullopt;
    Date out;
    out.days_ = std::chrono::sys_days{ymd};
    return out;
  }

  static Date parse(std::string_view s) {
    auto d = try_parse(s);
    if (!d) throw DataError("invalid date: " + std::string(s));
    return *d;
  }

  std::string str() const {
    std::chrono::year_month_day ymd{days_};
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", int(ymd.year()),
                  unsigned(ymd.month()), unsigned(ymd.day()));
    return buf;
  }

  /// Whole days from this date to `other` (negative if `other` is earlier).
  long days_until(const Date& other) const {
    return (other.days_ - days_).count();
  }

  Date plus_days(long n) const {
    Date out;
    out.days_ = days_ + std::chrono::days{n};
    return out;
  }

  auto operator<=>(const Date&) const = default;

 private:
  std::chrono::sys_days days_{};
};

}  // namespace newsrank
