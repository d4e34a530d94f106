#pragma once

#include <cstdlib>
#include <iostream>
#include <string>

namespace nanosim {

// Protocol-level diagnostics, off by default; set NANOSIM_LOG=1 to enable.
inline bool log_enabled() {
  static const bool enabled = [] {
    const char* v = std::getenv("NANOSIM_LOG");
    return v != nullptr && std::string(v) != "0";
  }();
  return enabled;
}

inline void logln(const std::string& msg) {
  if (log_enabled()) std::cerr << "[nanosim] " << msg << '\n';
}

}  // namespace nanosim
