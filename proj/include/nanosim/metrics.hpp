#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "nanosim/time.hpp"
#include "nanosim/trace.hpp"

namespace nanosim {

// Shortest round-trip decimal rendering, used everywhere a double is
// serialized so re-export is byte-identical.
inline std::string fmt_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

struct MetricsReport {
  std::uint64_t seed = 0;
  double t_end = 0.0;
  std::uint64_t beacons_sent = 0;
  std::uint64_t beacons_delivered = 0;  // receiver-counted
  double delivery_ratio = 0.0;
  std::uint64_t collisions = 0;
  std::uint64_t cancelled_backups = 0;
  std::vector<double> detect_to_halt;  // classification return -> last Halt delivery
  std::uint64_t cells_inactivated = 0;
  std::uint64_t false_halts = 0;
  std::uint64_t cycles_completed = 0;
  std::uint64_t run_wall_events = 0;  // trace records emitted
  double slot_utilization = 0.0;

  double mean_detect_to_halt() const {
    if (detect_to_halt.empty()) return 0.0;
    double s = 0.0;
    for (double v : detect_to_halt) s += v;
    return s / static_cast<double>(detect_to_halt.size());
  }

  double max_detect_to_halt() const {
    double m = 0.0;
    for (double v : detect_to_halt) m = std::max(m, v);
    return m;
  }

  bool operator==(const MetricsReport&) const = default;

  static std::string csv_header() {
    return "seed,t_end,beacons_sent,beacons_delivered,delivery_ratio,collisions,"
           "cancelled_backups,mean_detect_to_halt,max_detect_to_halt,cells_inactivated,"
           "false_halts,cycles_completed,slot_utilization";
  }

  std::string csv_row() const {
    std::string row = std::to_string(seed);
    row += ',' + fmt_double(t_end);
    row += ',' + std::to_string(beacons_sent);
    row += ',' + std::to_string(beacons_delivered);
    row += ',' + fmt_double(delivery_ratio);
    row += ',' + std::to_string(collisions);
    row += ',' + std::to_string(cancelled_backups);
    row += ',' + fmt_double(mean_detect_to_halt());
    row += ',' + fmt_double(max_detect_to_halt());
    row += ',' + std::to_string(cells_inactivated);
    row += ',' + std::to_string(false_halts);
    row += ',' + std::to_string(cycles_completed);
    row += ',' + fmt_double(slot_utilization);
    return row;
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["seed"] = seed;
    j["t_end"] = t_end;
    j["channel"] = {
        {"beacons_sent", beacons_sent},
        {"beacons_delivered", beacons_delivered},
        {"delivery_ratio", delivery_ratio},
        {"collisions", collisions},
        {"cancelled_backups", cancelled_backups},
        {"slot_utilization", slot_utilization},
    };
    j["detection"] = {
        {"latencies", detect_to_halt},
        {"mean_detect_to_halt", mean_detect_to_halt()},
        {"max_detect_to_halt", max_detect_to_halt()},
    };
    j["mission"] = {
        {"cells_inactivated", cells_inactivated},
        {"false_halts", false_halts},
        {"cycles_completed", cycles_completed},
    };
    j["run_wall_events"] = run_wall_events;
    return j;
  }

  static MetricsReport from_json(const nlohmann::json& j) {
    MetricsReport r;
    r.seed = j.at("seed").get<std::uint64_t>();
    r.t_end = j.at("t_end").get<double>();
    const auto& c = j.at("channel");
    r.beacons_sent = c.at("beacons_sent").get<std::uint64_t>();
    r.beacons_delivered = c.at("beacons_delivered").get<std::uint64_t>();
    r.delivery_ratio = c.at("delivery_ratio").get<double>();
    r.collisions = c.at("collisions").get<std::uint64_t>();
    r.cancelled_backups = c.at("cancelled_backups").get<std::uint64_t>();
    r.slot_utilization = c.at("slot_utilization").get<double>();
    r.detect_to_halt = j.at("detection").at("latencies").get<std::vector<double>>();
    const auto& m = j.at("mission");
    r.cells_inactivated = m.at("cells_inactivated").get<std::uint64_t>();
    r.false_halts = m.at("false_halts").get<std::uint64_t>();
    r.cycles_completed = m.at("cycles_completed").get<std::uint64_t>();
    r.run_wall_events = j.at("run_wall_events").get<std::uint64_t>();
    return r;
  }

  void write_json(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open metrics file for writing: " + path);
    f << to_json().dump(2) << '\n';
    if (!f) throw std::runtime_error("failed writing metrics file: " + path);
  }

  void write_csv(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open metrics file for writing: " + path);
    f << csv_header() << '\n' << csv_row() << '\n';
    if (!f) throw std::runtime_error("failed writing metrics file: " + path);
  }
};

// Live per-run collector. Channel-level counters are fed from trace records;
// mission counters (cells, false halts, cycles) come straight from the
// mission hooks so the trace-replay checker cross-checks them independently.
class MetricsCollector {
 public:
  MetricsCollector(std::uint64_t seed, SimTime t_end, int agents_total, SimTime slot_width)
      : agents_total_(agents_total), slot_width_(slot_width) {
    report_.seed = seed;
    report_.t_end = t_end.units();
  }

  void on_record(const TraceRecord& r) {
    ++report_.run_wall_events;
    switch (r.ev) {
      case TraceEvent::Tx:
        ++tx_frames_;
        if (r.kind == "LeaderBeacon" || r.kind == "MemberBeacon") ++report_.beacons_sent;
        if (r.kind == "DetectionAlert") last_alert_tx_[r.platoon] = r.at;
        if (r.kind == "Halt") {
          auto it = last_alert_tx_.find(r.platoon);
          if (it != last_alert_tx_.end()) open_halt_[r.platoon] = it->second;
        }
        break;
      case TraceEvent::Rx:
        if (r.kind == "LeaderBeacon" || r.kind == "MemberBeacon") ++report_.beacons_delivered;
        if (r.kind == "Halt") {
          auto it = open_halt_.find(r.platoon);
          if (it != open_halt_.end()) {
            report_.detect_to_halt.push_back((r.at - it->second).units());
            open_halt_.erase(it);
          }
        }
        break;
      case TraceEvent::Collided:
        ++report_.collisions;
        break;
      case TraceEvent::Cancelled:
        ++report_.cancelled_backups;
        break;
      default:
        break;  // LOST / CYCLE / STATE only contribute to run_wall_events
    }
  }

  void on_cell_inactivated() { ++report_.cells_inactivated; }
  void on_false_halt() { ++report_.false_halts; }
  void on_cycle() { ++report_.cycles_completed; }

  MetricsReport finalize() const {
    MetricsReport r = report_;
    const std::uint64_t expected = r.beacons_sent * static_cast<std::uint64_t>(std::max(0, agents_total_ - 1));
    r.delivery_ratio =
        static_cast<double>(r.beacons_delivered) / static_cast<double>(std::max<std::uint64_t>(1, expected));
    r.slot_utilization =
        r.t_end > 0.0 ? static_cast<double>(tx_frames_) * slot_width_.units() / r.t_end : 0.0;
    return r;
  }

 private:
  int agents_total_;
  SimTime slot_width_;
  MetricsReport report_;
  std::uint64_t tx_frames_ = 0;
  std::map<int, SimTime> last_alert_tx_;
  std::map<int, SimTime> open_halt_;  // platoon -> alert tx time of the in-flight Halt
};

}  // namespace nanosim
