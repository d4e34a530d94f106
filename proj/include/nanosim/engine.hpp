#pragma once

#include <cstdint>
#include <functional>
#include <queue>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "nanosim/time.hpp"

namespace nanosim {

enum class EventKind {
  TransmitStart,
  DeliveryAt,
  ComputeReturn,
  SensorTick,
  MotionTick,
  ScenarioCommand,
};

inline const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::TransmitStart: return "TransmitStart";
    case EventKind::DeliveryAt: return "DeliveryAt";
    case EventKind::ComputeReturn: return "ComputeReturn";
    case EventKind::SensorTick: return "SensorTick";
    case EventKind::MotionTick: return "MotionTick";
    case EventKind::ScenarioCommand: return "ScenarioCommand";
  }
  return "?";
}

// Same-instant pop order. Deliveries (and the cancellations they trigger)
// come first so a fresh leader beacon can cancel a stale backup scheduled
// for the very same instant before that backup's transmission fires.
inline int priority_class(EventKind k) {
  switch (k) {
    case EventKind::DeliveryAt: return 0;
    case EventKind::ScenarioCommand: return 1;
    case EventKind::TransmitStart: return 2;
    default: return 3;  // compute returns and periodic ticks
  }
}

using EventId = std::uint64_t;

struct RunSummary {
  std::uint64_t events_fired = 0;
  SimTime clock{};
};

struct EngineError : std::runtime_error {
  EngineError(EventId id, SimTime at, const std::string& what)
      : std::runtime_error("event " + std::to_string(id) + " at t=" + at.str() + ": " + what),
        event_id(id),
        time(at) {}
  EventId event_id;
  SimTime time;
};

// Deterministic single-threaded discrete-event loop. Pop order is
// (fire_at, priority_class, insertion seq); cancelled events never fire.
class Engine {
 public:
  EventId schedule(SimTime delay, EventKind kind, std::function<void()> handler) {
    if (delay.ticks < 0) throw std::invalid_argument("schedule: negative delay");
    const EventId id = next_id_++;
    queue_.push(Entry{now_ + delay, priority_class(kind), id, kind, std::move(handler)});
    pending_.insert(id);
    return id;
  }

  // True iff the event was pending and is now removed; misses return false.
  bool unschedule(EventId id) {
    if (pending_.erase(id) == 0) return false;
    cancelled_.insert(id);
    return true;
  }

  RunSummary run_until(SimTime t_end) {
    if (t_end < now_) throw std::invalid_argument("run_until: t_end before current clock");
    std::uint64_t fired = 0;
    while (!queue_.empty() && queue_.top().at <= t_end) {
      Entry e = queue_.top();
      queue_.pop();
      if (cancelled_.erase(e.id) > 0) continue;
      pending_.erase(e.id);
      now_ = e.at;
      ++fired;
      ++events_fired_total_;
      try {
        e.fn();
      } catch (const std::exception& ex) {
        throw EngineError(e.id, e.at, ex.what());
      }
    }
    now_ = t_end;
    return RunSummary{fired, now_};
  }

  SimTime now() const { return now_; }
  std::uint64_t events_fired_total() const { return events_fired_total_; }
  bool pending(EventId id) const { return pending_.count(id) > 0; }

 private:
  struct Entry {
    SimTime at;
    int prio;
    EventId id;  // also the insertion sequence number
    EventKind kind;
    std::function<void()> fn;
  };
  struct Later {
    bool operator()(const Entry& a, const Entry& b) const {
      return std::tie(a.at.ticks, a.prio, a.id) > std::tie(b.at.ticks, b.prio, b.id);
    }
  };

  std::priority_queue<Entry, std::vector<Entry>, Later> queue_;
  std::unordered_set<EventId> pending_;
  std::unordered_set<EventId> cancelled_;
  EventId next_id_ = 1;
  SimTime now_{};
  std::uint64_t events_fired_total_ = 0;
};

}  // namespace nanosim
