#pragma once

#include <charconv>
#include <cmath>
#include <string>
#include <system_error>

namespace addkit {

/// Shortest decimal text that parses back to exactly `v`.
inline std::string format_real(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) return std::to_string(v);
  return std::string(buf, end);
}

/// Like format_real, but always contains '.' or an exponent so the text is a
/// floating-point literal in C-family languages.
inline std::string format_real_literal(double v) {
  std::string s = format_real(v);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

}  // namespace addkit
