#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nanosim/engine.hpp"
#include "nanosim/metrics.hpp"
#include "nanosim/trace.hpp"

namespace nanosim {

enum class MissionState { Patrol, Halted, Treating, Exiting, Done };

inline const char* to_string(MissionState s) {
  switch (s) {
    case MissionState::Patrol: return "PATROL";
    case MissionState::Halted: return "HALTED";
    case MissionState::Treating: return "TREATING";
    case MissionState::Exiting: return "EXITING";
    case MissionState::Done: return "DONE";
  }
  return "?";
}

struct SegmentDef {
  int id = 0;
  SimTime length{};  // traversal time at unit speed
  int target_cells = 0;
};

struct RouteGraph {
  std::vector<int> patrol_loop;  // closed cycle of segment ids
  std::vector<int> exit_path;    // first element is a junction on the loop
};

// Abstracted detector standing in for the vision member's classification
// stage, plus the off-body compute round trip.
struct DetectorModel {
  double true_positive_rate = 1.0;
  double false_positive_rate = 0.0;
  SimTime sense_period{};
  SimTime compute_round_trip{};
};

struct MissionConfig {
  int max_cycles = 1;              // the circulation parameter
  std::int64_t treat_capacity = -1;  // -1 = unlimited (direct inactivation)
  SimTime treatment_duration{};
};

// Diseased-cell load per segment; shared by all platoons in a scenario.
class World {
 public:
  explicit World(std::vector<SegmentDef> segments) {
    for (const auto& s : segments) segments_.emplace(s.id, s);
  }

  bool has(int id) const { return segments_.count(id) > 0; }
  SimTime length(int id) const { return segments_.at(id).length; }
  int cells(int id) const { return segments_.at(id).target_cells; }

  bool inactivate_one(int id) {
    auto& s = segments_.at(id);
    if (s.target_cells <= 0) return false;
    --s.target_cells;
    return true;
  }

  int total_cells() const {
    int total = 0;
    for (const auto& [id, s] : segments_) total += s.target_cells;
    return total;
  }

 private:
  std::map<int, SegmentDef> segments_;
};

// One platoon's mission state machine and motion along the route graph.
// Transitions: PATROL->HALTED->TREATING->PATROL, PATROL->EXITING->DONE.
class PlatoonMission {
 public:
  PlatoonMission(Engine& engine, World& world, TraceRecorder& trace, MetricsCollector* metrics,
                 RouteGraph route, MissionConfig cfg, int platoon_id, double speed)
      : engine_(engine),
        world_(world),
        trace_(trace),
        metrics_(metrics),
        route_(std::move(route)),
        cfg_(cfg),
        platoon_(platoon_id),
        speed_(speed),
        capacity_(cfg.treat_capacity) {
    if (route_.patrol_loop.empty()) throw std::invalid_argument("patrol_loop must be non-empty");
    if (speed_ <= 0.0) throw std::invalid_argument("speed must be positive");
  }

  void start(SimTime offset) {
    engine_.schedule(offset, EventKind::MotionTick, [this] { enter_segment(0, false); });
  }

  MissionState state() const { return state_; }
  int platoon_id() const { return platoon_; }
  int current_segment() const { return segment_id_; }
  int cycles_completed() const { return cycles_; }
  std::int64_t treat_capacity() const { return capacity_; }
  double speed() const { return speed_; }
  bool exit_requested() const { return exit_requested_; }

  void request_exit() { exit_requested_ = true; }

  // Fraction of the current segment already traversed, at the engine clock.
  double progress() const {
    if (traversal_.ticks <= 0) return 0.0;
    SimTime remaining = remaining_;
    if (state_ == MissionState::Patrol || state_ == MissionState::Exiting) {
      remaining = complete_at_ - engine_.now();
    }
    const double p =
        1.0 - static_cast<double>(remaining.ticks) / static_cast<double>(traversal_.ticks);
    return p < 0.0 ? 0.0 : (p > 1.0 ? 1.0 : p);
  }

  // The whole team stops moving; the radio keeps running. Detection-driven
  // halts count against the clean-cycle exit condition, scripted ones don't.
  void halt(bool from_detection = true) {
    if (state_ != MissionState::Patrol) return;
    if (motion_event_) {
      engine_.unschedule(*motion_event_);
      motion_event_.reset();
      remaining_ = complete_at_ - engine_.now();
    }
    if (from_detection) ++detections_this_cycle_;
    set_state(MissionState::Halted);
  }

  struct TreatOutcome {
    bool treated = false;  // false: false alarm or exhausted payload
  };

  // Halted -> Treating. The outcome is fixed on assignment: a clean segment
  // (false alarm) or an exhausted payload completes immediately with no
  // decrement; otherwise one cell is inactivated after treatment_duration.
  TreatOutcome begin_treatment(int segment) {
    if (state_ == MissionState::Halted) set_state(MissionState::Treating);
    if (capacity_ == 0) {
      // Payload exhausted: cannot treat further, head for the exit.
      request_exit();
      return {false};
    }
    if (world_.inactivate_one(segment)) {
      if (capacity_ > 0) --capacity_;
      return {true};
    }
    return {false};
  }

  void finish_treatment(const TreatOutcome& outcome) {
    if (!metrics_) return;
    if (outcome.treated) {
      metrics_->on_cell_inactivated();
    } else {
      metrics_->on_false_halt();
    }
  }

  void resume() {
    if (state_ != MissionState::Halted && state_ != MissionState::Treating) return;
    set_state(MissionState::Patrol);
    if (remaining_.ticks > 0) {
      complete_at_ = engine_.now() + remaining_;
      motion_event_ =
          engine_.schedule(remaining_, EventKind::MotionTick, [this] { on_segment_complete(); });
    }
  }

 private:
  void set_state(MissionState s) {
    state_ = s;
    trace_.record({engine_.now(), TraceEvent::State, platoon_, -1, to_string(s), 0, -1});
  }

  SimTime traversal_for(int segment_id) const {
    const double ticks = static_cast<double>(world_.length(segment_id).ticks) / speed_;
    return SimTime{static_cast<std::int64_t>(std::llround(ticks))};
  }

  void enter_segment(std::size_t index, bool exit_path) {
    // While exiting, divert onto the exit path at its junction segment.
    if (!exit_path && state_ == MissionState::Exiting && !route_.exit_path.empty() &&
        route_.patrol_loop[index] == route_.exit_path.front()) {
      enter_segment(0, true);
      return;
    }
    on_exit_path_ = exit_path;
    route_index_ = index;
    segment_id_ = exit_path ? route_.exit_path[index] : route_.patrol_loop[index];
    traversal_ = traversal_for(segment_id_);
    remaining_ = traversal_;
    complete_at_ = engine_.now() + traversal_;
    motion_event_ =
        engine_.schedule(traversal_, EventKind::MotionTick, [this] { on_segment_complete(); });
  }

  void on_segment_complete() {
    motion_event_.reset();
    remaining_ = SimTime{0};
    if (on_exit_path_) {
      if (route_index_ + 1 < route_.exit_path.size()) {
        enter_segment(route_index_ + 1, true);
      } else {
        set_state(MissionState::Done);  // reached the exit terminal
      }
      return;
    }
    const std::size_t next = (route_index_ + 1) % route_.patrol_loop.size();
    if (next == 0) {
      ++cycles_;
      trace_.record({engine_.now(), TraceEvent::Cycle, platoon_, -1, "cycle",
                     static_cast<std::uint64_t>(cycles_), -1});
      if (metrics_) metrics_->on_cycle();
      check_exit();
      detections_this_cycle_ = 0;
    }
    enter_segment(next, false);
  }

  // Evaluated at each patrol-loop completion: leave once the circulation
  // parameter is reached and the last full cycle was detection-free, or
  // when an exit was explicitly requested.
  void check_exit() {
    if (state_ != MissionState::Patrol) return;
    const bool clean_cycle = detections_this_cycle_ == 0;
    if (exit_requested_ || (cycles_ >= cfg_.max_cycles && clean_cycle)) {
      set_state(MissionState::Exiting);
    }
  }

  Engine& engine_;
  World& world_;
  TraceRecorder& trace_;
  MetricsCollector* metrics_;
  RouteGraph route_;
  MissionConfig cfg_;
  int platoon_;
  double speed_;

  MissionState state_ = MissionState::Patrol;
  std::size_t route_index_ = 0;
  bool on_exit_path_ = false;
  int segment_id_ = -1;
  SimTime traversal_{};
  SimTime remaining_{};
  SimTime complete_at_{};
  std::optional<EventId> motion_event_;
  int cycles_ = 0;
  int detections_this_cycle_ = 0;
  std::int64_t capacity_;
  bool exit_requested_ = false;
};

}  // namespace nanosim
