#pragma once

#include <charconv>
#include <stdexcept>
#include <string>
#include <system_error>

namespace newsrank {

/// Shortest decimal text that round-trips the exact double. Keeps CSV and
/// fingerprint material platform-independent, unlike stream formatting.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw std::invalid_argument("not a number: " + std::string(s));
  return v;
}

}  // namespace newsrank
