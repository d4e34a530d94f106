#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "nanosim/metrics.hpp"
#include "nanosim/time.hpp"

namespace nanosim {

// Recomputes a MetricsReport from a trace file alone, independently of the
// live collector: channel counters from message lines, mission counters from
// CYCLE lines and treatment timing (a TreatDone transmitted at the instant
// its TreatAssign arrived means nothing was treated).
class TraceReplay {
 public:
  static SimTime parse_time(const std::string& s) {
    const auto dot = s.find('.');
    if (dot == std::string::npos || dot + 2 != s.size()) {
      throw std::runtime_error("bad trace time: " + s);
    }
    const std::int64_t whole = std::stoll(s.substr(0, dot));
    const std::int64_t frac = std::stoll(s.substr(dot + 1));
    return SimTime{whole * 10 + (whole < 0 ? -frac : frac)};
  }

  static MetricsReport from_text(const std::string& text) {
    std::istringstream in(text);
    return from_stream(in);
  }

  static MetricsReport from_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open trace file: " + path);
    return from_stream(in);
  }

  static MetricsReport from_stream(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line.rfind("# nanosim-trace v1 ", 0) != 0) {
      throw std::runtime_error("missing trace header");
    }
    MetricsReport r;
    int agents = 0;
    SimTime slot_width{};
    {
      std::istringstream hs(line.substr(std::string("# nanosim-trace v1 ").size()));
      std::string kv;
      while (hs >> kv) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw std::runtime_error("bad trace header field: " + kv);
        const std::string key = kv.substr(0, eq), val = kv.substr(eq + 1);
        if (key == "seed") {
          r.seed = std::stoull(val);
        } else if (key == "t_end") {
          r.t_end = parse_time(val).units();
        } else if (key == "agents") {
          agents = std::stoi(val);
        } else if (key == "slot_width") {
          slot_width = parse_time(val);
        }
      }
    }

    std::uint64_t tx_frames = 0;
    std::map<int, SimTime> last_alert_tx;   // platoon -> time
    std::map<int, SimTime> open_halt;       // platoon -> alert tx time
    // (platoon, agent) -> time: an agent also hears foreign TreatAssigns it
    // ignores, so the key must include the commanding platoon.
    std::map<std::pair<int, int>, SimTime> last_assign_rx;

    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::vector<std::string> f;
      std::size_t pos = 0;
      while (true) {
        const auto tab = line.find('\t', pos);
        f.push_back(line.substr(pos, tab == std::string::npos ? tab : tab - pos));
        if (tab == std::string::npos) break;
        pos = tab + 1;
      }
      if (f.size() != 7) throw std::runtime_error("malformed trace line: " + line);
      const SimTime t = parse_time(f[0]);
      const std::string& ev = f[1];
      const int platoon = std::stoi(f[2]);
      const std::string& kind = f[4];
      ++r.run_wall_events;

      if (ev == "TX") {
        ++tx_frames;
        if (kind == "LeaderBeacon" || kind == "MemberBeacon") ++r.beacons_sent;
        if (kind == "DetectionAlert") last_alert_tx[platoon] = t;
        if (kind == "Halt") {
          auto it = last_alert_tx.find(platoon);
          if (it != last_alert_tx.end()) open_halt[platoon] = it->second;
        }
        if (kind == "TreatDone") {
          const int sender = std::stoi(f[3]);
          auto it = last_assign_rx.find({platoon, sender});
          if (it != last_assign_rx.end() && t > it->second) {
            ++r.cells_inactivated;
          } else {
            ++r.false_halts;
          }
        }
      } else if (ev == "RX") {
        if (kind == "LeaderBeacon" || kind == "MemberBeacon") ++r.beacons_delivered;
        if (kind == "Halt") {
          auto it = open_halt.find(platoon);
          if (it != open_halt.end()) {
            r.detect_to_halt.push_back((t - it->second).units());
            open_halt.erase(it);
          }
        }
        if (kind == "TreatAssign") last_assign_rx[{platoon, std::stoi(f[6])}] = t;
      } else if (ev == "COLLIDED") {
        ++r.collisions;
      } else if (ev == "CANCELLED") {
        ++r.cancelled_backups;
      } else if (ev == "CYCLE") {
        ++r.cycles_completed;
      } else if (ev != "LOST" && ev != "STATE") {
        throw std::runtime_error("unknown trace event: " + ev);
      }
    }

    const std::uint64_t expected =
        r.beacons_sent * static_cast<std::uint64_t>(agents > 1 ? agents - 1 : 0);
    r.delivery_ratio = static_cast<double>(r.beacons_delivered) /
                       static_cast<double>(expected > 0 ? expected : 1);
    r.slot_utilization =
        r.t_end > 0.0 ? static_cast<double>(tx_frames) * slot_width.units() / r.t_end : 0.0;
    return r;
  }
};

}  // namespace nanosim
