#pragma once

#include <charconv>
#include <string>
#include <string_view>

#include "signscan/errors.hpp"

namespace signscan {

/// Shortest decimal string that round-trips the exact double.
inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

inline double parse_double(std::string_view s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) throw Error("bad number: " + std::string(s));
  return v;
}

inline long parse_long(std::string_view s) {
  long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) throw Error("bad integer: " + std::string(s));
  return v;
}

}  // namespace signscan
