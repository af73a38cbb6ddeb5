#pragma once

#include <charconv>
#include <string>

namespace telecoupler {

/// Shortest round-trip decimal representation; locale-free and
/// byte-deterministic across runs.
inline std::string num_to_string(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string num_to_string(long long v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace telecoupler
