#pragma once

#include <charconv>
#include <string>
#include <system_error>

namespace cipm {

/// Shortest decimal text that parses back to exactly the same double.
inline std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  if (res.ec != std::errc{}) return "nan";
  return std::string(buf, res.ptr);
}

}  // namespace cipm
