#pragma once

#include <cstdint>
#include <fstream>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nanosim/time.hpp"

namespace nanosim {

enum class TraceEvent { Tx, Rx, Lost, Collided, Cancelled, Cycle, State };

inline const char* to_string(TraceEvent e) {
  switch (e) {
    case TraceEvent::Tx: return "TX";
    case TraceEvent::Rx: return "RX";
    case TraceEvent::Lost: return "LOST";
    case TraceEvent::Collided: return "COLLIDED";
    case TraceEvent::Cancelled: return "CANCELLED";
    case TraceEvent::Cycle: return "CYCLE";
    case TraceEvent::State: return "STATE";
  }
  return "?";
}

struct TraceRecord {
  SimTime at{};
  TraceEvent ev = TraceEvent::Tx;
  int platoon = 0;
  int sender = -1;  // -1 renders as "-"
  std::string kind;
  std::uint64_t seq = 0;
  int receiver = -1;  // -1 renders as "-"
};

// Tab-separated line, fixed field order:
//   time  event  platoon  sender  kind  seq  receiver
inline std::string format_trace_line(const TraceRecord& r) {
  std::string line = r.at.str();
  line += '\t';
  line += to_string(r.ev);
  line += '\t';
  line += std::to_string(r.platoon);
  line += '\t';
  line += r.sender < 0 ? std::string("-") : std::to_string(r.sender);
  line += '\t';
  line += r.kind;
  line += '\t';
  line += std::to_string(r.seq);
  line += '\t';
  line += r.receiver < 0 ? std::string("-") : std::to_string(r.receiver);
  return line;
}

// Collects the per-run event trace. The header line carries the run
// parameters the replay checker needs so a trace file is self-contained.
class TraceRecorder {
 public:
  explicit TraceRecorder(bool keep_text = true) : keep_text_(keep_text) {}

  void set_header(std::uint64_t seed, SimTime t_end, int agents, SimTime slot_width) {
    header_ = "# nanosim-trace v1 seed=" + std::to_string(seed) + " t_end=" + t_end.str() +
              " agents=" + std::to_string(agents) + " slot_width=" + slot_width.str();
  }

  void set_sink(std::function<void(const TraceRecord&)> sink) { sink_ = std::move(sink); }

  void record(const TraceRecord& r) {
    ++count_;
    if (keep_text_) lines_.push_back(format_trace_line(r));
    if (sink_) sink_(r);
  }

  std::uint64_t count() const { return count_; }
  const std::string& header() const { return header_; }
  const std::vector<std::string>& lines() const { return lines_; }

  std::string text() const {
    std::string out;
    if (!header_.empty()) {
      out += header_;
      out += '\n';
    }
    for (const auto& l : lines_) {
      out += l;
      out += '\n';
    }
    return out;
  }

  void write(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open trace file for writing: " + path);
    f << text();
    if (!f) throw std::runtime_error("failed writing trace file: " + path);
  }

 private:
  bool keep_text_;
  std::string header_;
  std::vector<std::string> lines_;
  std::uint64_t count_ = 0;
  std::function<void(const TraceRecord&)> sink_;
};

}  // namespace nanosim
