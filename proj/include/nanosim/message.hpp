#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace nanosim {

enum class Role { Leader, Vision, Treatment, Power };

inline const char* to_string(Role r) {
  switch (r) {
    case Role::Leader: return "Leader";
    case Role::Vision: return "Vision";
    case Role::Treatment: return "Treatment";
    case Role::Power: return "Power";
  }
  return "?";
}

inline std::optional<Role> parse_role(const std::string& s) {
  if (s == "Leader") return Role::Leader;
  if (s == "Vision") return Role::Vision;
  if (s == "Treatment") return Role::Treatment;
  if (s == "Power") return Role::Power;
  return std::nullopt;
}

enum class MessageKind {
  LeaderBeacon,
  MemberBeacon,
  DetectionAlert,
  Halt,
  TreatAssign,
  TreatDone,
  Resume,
};

inline const char* to_string(MessageKind k) {
  switch (k) {
    case MessageKind::LeaderBeacon: return "LeaderBeacon";
    case MessageKind::MemberBeacon: return "MemberBeacon";
    case MessageKind::DetectionAlert: return "DetectionAlert";
    case MessageKind::Halt: return "Halt";
    case MessageKind::TreatAssign: return "TreatAssign";
    case MessageKind::TreatDone: return "TreatDone";
    case MessageKind::Resume: return "Resume";
  }
  return "?";
}

inline bool is_priority(MessageKind k) {
  return k != MessageKind::LeaderBeacon && k != MessageKind::MemberBeacon;
}

inline bool is_beacon(MessageKind k) {
  return k == MessageKind::LeaderBeacon || k == MessageKind::MemberBeacon;
}

struct KinematicSnapshot {
  int segment_index = 0;
  double segment_progress = 0.0;  // [0, 1]
  double speed = 0.0;             // segments per time unit
};

// One frame on the shared medium.
struct Message {
  MessageKind kind = MessageKind::MemberBeacon;
  int platoon = 0;
  int sender = 0;
  Role sender_role = Role::Power;
  int sender_position = 0;
  std::uint64_t seq = 0;  // per-sender counter
  KinematicSnapshot vehicle_data{};
  std::optional<int> mission_payload;  // segment id for DetectionAlert/TreatAssign

  bool priority() const { return is_priority(kind); }
};

}  // namespace nanosim
