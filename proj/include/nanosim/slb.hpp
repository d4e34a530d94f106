#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "nanosim/channel.hpp"
#include "nanosim/engine.hpp"
#include "nanosim/log.hpp"
#include "nanosim/message.hpp"
#include "nanosim/mission.hpp"
#include "nanosim/random.hpp"
#include "nanosim/time.hpp"
#include "nanosim/trace.hpp"

namespace nanosim {

struct SlbConfig {
  SimTime beacon_interval{};
  SimTime slot_offset{};  // per-position delay between follower slots
  SimTime slot_width{};   // airtime of one frame
};

// One agent's slotted leader-based beaconing state machine. The leader's
// periodic beacon anchors follower slots at position * slot_offset after the
// leader's transmit start; each sender also keeps an interval-based backup
// of its own beacon which a fresh leader beacon cancels.
class Agent {
 public:
  Agent(Engine& engine, Channel& channel, TraceRecorder& trace, RandomStream& rng, SlbConfig cfg,
        int id, int platoon, Role role, int position, PlatoonMission* mission, World* world,
        DetectorModel detector, bool primary_treatment)
      : engine_(engine),
        channel_(channel),
        trace_(trace),
        rng_(rng),
        cfg_(cfg),
        id_(id),
        platoon_(platoon),
        role_(role),
        position_(position),
        mission_(mission),
        world_(world),
        detector_(detector),
        primary_treatment_(primary_treatment) {}

  int id() const { return id_; }
  int platoon() const { return platoon_; }
  Role role() const { return role_; }
  int position() const { return position_; }
  bool halted() const { return halted_; }
  std::optional<EventId> pending_beacon() const { return pending_beacon_; }
  const std::map<int, KinematicSnapshot>& cacc_view() const { return cacc_view_; }

  // The leader transmits its first beacon at the platoon's start offset and
  // keeps the interval cycle running; followers schedule nothing until they
  // hear it. Vision members start their periodic sensing.
  void on_startup(SimTime start_offset) {
    if (role_ == Role::Leader) {
      pending_beacon_ =
          engine_.schedule(start_offset, EventKind::TransmitStart, [this] { send_beacon(); });
    }
    if (role_ == Role::Vision && detector_.sense_period.ticks > 0) {
      engine_.schedule(start_offset + detector_.sense_period, EventKind::SensorTick,
                       [this] { sensor_tick(); });
    }
  }

  void handle_delivery(const Message& msg) {
    if (msg.platoon != platoon_) return;  // not our leader's command: keep cycling
    cacc_view_[msg.sender] = msg.vehicle_data;
    switch (msg.kind) {
      case MessageKind::LeaderBeacon:
        if (role_ != Role::Leader) on_leader_beacon();
        break;
      case MessageKind::MemberBeacon:
        break;
      case MessageKind::DetectionAlert:
        if (role_ == Role::Leader) leader_handle_alert(msg);
        break;
      case MessageKind::Halt:
        if (role_ == Role::Leader) {
          logln("leader " + std::to_string(id_) + " ignoring Halt");
        } else {
          halted_ = true;
        }
        break;
      case MessageKind::TreatAssign:
        if (role_ == Role::Treatment && primary_treatment_) {
          handle_treat_assign(msg);
        } else {
          logln("agent " + std::to_string(id_) + " (" + to_string(role_) +
                ") ignoring TreatAssign");
        }
        break;
      case MessageKind::TreatDone:
        if (role_ == Role::Leader) {
          leader_resume();
        } else {
          logln("agent " + std::to_string(id_) + " ignoring TreatDone");
        }
        break;
      case MessageKind::Resume:
        if (role_ != Role::Leader) halted_ = false;
        break;
    }
  }

  // External control input delivered to the leader.
  void scripted_command(const std::string& command) {
    if (role_ != Role::Leader || mission_ == nullptr) return;
    if (command == "halt") {
      if (mission_->state() != MissionState::Patrol) return;
      transmit(make_message(MessageKind::Halt));
      mission_->halt(/*from_detection=*/false);
    } else if (command == "resume") {
      if (mission_->state() != MissionState::Halted) return;
      transmit(make_message(MessageKind::Resume));
      mission_->resume();
    } else if (command == "exit") {
      mission_->request_exit();
    }
  }

  // Positive classification returned from the off-body server: alert the
  // leader immediately, out of band of the TDMA schedule.
  void raise_detection(int segment) {
    if (role_ != Role::Vision) {
      logln("agent " + std::to_string(id_) + " cannot raise detections");
      return;
    }
    Message alert = make_message(MessageKind::DetectionAlert);
    alert.mission_payload = segment;
    transmit(alert);
  }

 private:
  Message make_message(MessageKind kind) {
    Message m;
    m.kind = kind;
    m.platoon = platoon_;
    m.sender = id_;
    m.sender_role = role_;
    m.sender_position = position_;
    m.seq = next_seq_++;
    if (mission_ != nullptr) {
      m.vehicle_data = {mission_->current_segment(), mission_->progress(), mission_->speed()};
    }
    return m;
  }

  void transmit(const Message& msg) { channel_.transmit(msg); }

  void send_beacon() {
    transmit(make_message(role_ == Role::Leader ? MessageKind::LeaderBeacon
                                                : MessageKind::MemberBeacon));
    // The interval-based reschedule is the follower's backup: it fires only
    // if no fresh leader beacon cancels it first.
    pending_beacon_ =
        engine_.schedule(cfg_.beacon_interval, EventKind::TransmitStart, [this] { send_beacon(); });
  }

  void on_leader_beacon() {
    if (pending_beacon_ && engine_.unschedule(*pending_beacon_)) {
      trace_.record({engine_.now(), TraceEvent::Cancelled, platoon_, id_,
                     to_string(MessageKind::MemberBeacon), next_seq_, -1});
    }
    pending_beacon_.reset();
    // Anchor the slot to the leader's transmit start (delivery is one slot
    // width after it): airtime begins at leader_start + position * offset.
    const SimTime delay = cfg_.slot_offset * position_ - cfg_.slot_width;
    pending_beacon_ = engine_.schedule(delay, EventKind::TransmitStart, [this] { send_beacon(); });
  }

  void leader_handle_alert(const Message& alert) {
    if (mission_ == nullptr) return;
    if (mission_->state() != MissionState::Patrol) {
      logln("leader " + std::to_string(id_) + " ignoring alert while " +
            to_string(mission_->state()));
      return;
    }
    const int segment = alert.mission_payload.value_or(mission_->current_segment());
    transmit(make_message(MessageKind::Halt));
    mission_->halt();
    engine_.schedule(cfg_.slot_width, EventKind::TransmitStart, [this, segment] {
      Message assign = make_message(MessageKind::TreatAssign);
      assign.mission_payload = segment;
      transmit(assign);
    });
  }

  void handle_treat_assign(const Message& assign) {
    if (mission_ == nullptr) return;
    if (mission_->state() != MissionState::Halted) {
      logln("treatment agent " + std::to_string(id_) + " ignoring TreatAssign while " +
            to_string(mission_->state()));
      return;
    }
    const int segment = assign.mission_payload.value_or(mission_->current_segment());
    const auto outcome = mission_->begin_treatment(segment);
    const SimTime duration = outcome.treated ? treatment_duration() : SimTime{0};
    engine_.schedule(duration, EventKind::MotionTick, [this, outcome] {
      mission_->finish_treatment(outcome);
      transmit(make_message(MessageKind::TreatDone));
    });
  }

  void leader_resume() {
    if (mission_ == nullptr) return;
    if (mission_->state() != MissionState::Treating) {
      logln("leader " + std::to_string(id_) + " ignoring TreatDone while " +
            to_string(mission_->state()));
      return;
    }
    transmit(make_message(MessageKind::Resume));
    mission_->resume();
  }

  SimTime treatment_duration() const { return treatment_duration_; }

 public:
  void set_treatment_duration(SimTime d) { treatment_duration_ = d; }

 private:
  void sensor_tick() {
    engine_.schedule(detector_.sense_period, EventKind::SensorTick, [this] { sensor_tick(); });
    if (mission_ == nullptr || world_ == nullptr) return;
    if (mission_->state() != MissionState::Patrol) return;  // task processing is stopped
    if (compute_pending_) return;  // one upload in flight per vision member
    const int segment = mission_->current_segment();
    if (segment < 0 || !world_->has(segment)) return;
    const double p = world_->cells(segment) > 0 ? detector_.true_positive_rate
                                                : detector_.false_positive_rate;
    if (!rng_.bernoulli("det/p" + std::to_string(platoon_) + "/a" + std::to_string(id_), p)) return;
    compute_pending_ = true;
    engine_.schedule(detector_.compute_round_trip, EventKind::ComputeReturn, [this, segment] {
      compute_pending_ = false;
      raise_detection(segment);
    });
  }

  Engine& engine_;
  Channel& channel_;
  TraceRecorder& trace_;
  RandomStream& rng_;
  SlbConfig cfg_;
  int id_;
  int platoon_;
  Role role_;
  int position_;
  PlatoonMission* mission_;
  World* world_;
  DetectorModel detector_;
  bool primary_treatment_;
  SimTime treatment_duration_{};

  std::uint64_t next_seq_ = 0;
  std::optional<EventId> pending_beacon_;
  std::map<int, KinematicSnapshot> cacc_view_;
  bool halted_ = false;
  bool compute_pending_ = false;
};

}  // namespace nanosim
