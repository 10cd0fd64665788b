#pragma once

#include <charconv>
#include <string>
#include <system_error>

namespace fairlab::detail {

// shortest text that parses back to the same double
inline std::string format_double(double v) {
  if (v == 0.0) v = 0.0;  // fold -0 into 0
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw std::invalid_argument("not a number: " + s);
  return v;
}

}  // namespace fairlab::detail
