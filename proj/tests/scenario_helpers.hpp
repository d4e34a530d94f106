#pragma once

// Shared scenario builders for the test suites.

#include <vector>

#include "nanosim/scenario.hpp"

namespace nanosim::testing {

inline std::vector<Role> roles_for(int size) {
  std::vector<Role> roles{Role::Leader};
  if (size >= 2) roles.push_back(Role::Vision);
  if (size >= 3) roles.push_back(Role::Treatment);
  while (static_cast<int>(roles.size()) < size) roles.push_back(Role::Power);
  return roles;
}

inline PlatoonSpec platoon_spec(int id, int size) {
  PlatoonSpec p;
  p.id = id;
  p.size = size;
  p.roles = roles_for(size);
  p.start_offset = SimTime{0};
  p.speed = 1.0;
  p.detector.true_positive_rate = 1.0;
  p.detector.false_positive_rate = 0.0;
  p.detector.sense_period = SimTime::from_units(5.0);
  p.detector.compute_round_trip = SimTime::from_units(2.0);
  p.mission.max_cycles = 4;
  p.mission.treat_capacity = -1;
  p.mission.treatment_duration = SimTime::from_units(3.0);
  return p;
}

// Single platoon on a 4-segment loop (ids 0..3, 25 units each) with an exit
// branch 0 -> 9. Segment 2 carries `diseased_cells`.
inline Scenario base_scenario(int platoon_size = 4, int diseased_cells = 0) {
  Scenario s;
  s.slb.beacon_interval = SimTime::from_units(100.0);
  s.slb.slot_offset = SimTime::from_units(0.5);
  s.slb.slot_width = SimTime::from_units(0.5);
  s.platoons.push_back(platoon_spec(0, platoon_size));
  for (int i = 0; i < 4; ++i) {
    s.segments.push_back({i, SimTime::from_units(25.0), i == 2 ? diseased_cells : 0});
  }
  s.segments.push_back({9, SimTime::from_units(30.0), 0});
  s.route.patrol_loop = {0, 1, 2, 3};
  s.route.exit_path = {0, 9};
  s.seed = 1;
  s.t_end = SimTime::from_units(300.0);
  return s;
}

// A quiet world: nothing to detect, no motion events inside the run window.
inline Scenario protocol_only_scenario(int platoon_size = 4) {
  Scenario s = base_scenario(platoon_size);
  s.segments = {{0, SimTime::from_units(1.0e6), 0}};
  s.route.patrol_loop = {0};
  s.route.exit_path = {0};
  for (auto& p : s.platoons) p.detector.sense_period = SimTime::from_units(1.0e6);
  return s;
}

struct TraceLine {
  SimTime at{};
  std::string ev;
  int platoon = 0;
  std::string sender;
  std::string kind;
  std::uint64_t seq = 0;
  std::string receiver;
};

inline std::vector<TraceLine> parse_trace(const std::string& text) {
  std::vector<TraceLine> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string::npos) nl = text.size();
    const std::string line = text.substr(pos, nl - pos);
    pos = nl + 1;
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> f;
    std::size_t p = 0;
    while (true) {
      const auto tab = line.find('\t', p);
      f.push_back(line.substr(p, tab == std::string::npos ? tab : tab - p));
      if (tab == std::string::npos) break;
      p = tab + 1;
    }
    TraceLine t;
    const auto dot = f[0].find('.');
    t.at = SimTime{std::stoll(f[0].substr(0, dot)) * 10 + std::stoll(f[0].substr(dot + 1))};
    t.ev = f[1];
    t.platoon = std::stoi(f[2]);
    t.sender = f[3];
    t.kind = f[4];
    t.seq = std::stoull(f[5]);
    t.receiver = f[6];
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace nanosim::testing
