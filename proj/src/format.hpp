#pragma once

#include <charconv>
#include <string>

namespace supergeo::detail {

/// Shortest decimal text that parses back to exactly `v`.
inline std::string format_double(double v) {
  char buffer[64];
  auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), v);
  if (ec != std::errc{}) return std::to_string(v);
  return std::string(buffer, ptr);
}

}  // namespace supergeo::detail
