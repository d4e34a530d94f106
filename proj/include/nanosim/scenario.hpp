#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "nanosim/channel.hpp"
#include "nanosim/message.hpp"
#include "nanosim/mission.hpp"
#include "nanosim/slb.hpp"
#include "nanosim/time.hpp"

namespace nanosim {

struct PlatoonSpec {
  int id = 0;
  int size = 0;
  std::vector<Role> roles;  // by position; position 0 is the leader
  SimTime start_offset{};
  double speed = 1.0;
  DetectorModel detector;
  MissionConfig mission;
};

struct ScriptedCommand {
  SimTime time{};
  int platoon = 0;
  std::string command;  // halt | resume | exit
};

struct Scenario {
  SlbConfig slb;
  ChannelConfig channel;
  std::vector<PlatoonSpec> platoons;
  std::vector<SegmentDef> segments;
  RouteGraph route;
  std::vector<ScriptedCommand> scripted_commands;
  std::uint64_t seed = 0;
  SimTime t_end{};

  int total_agents() const {
    int n = 0;
    for (const auto& p : platoons) n += p.size;
    return n;
  }
};

// All validation failures for one file, each with its field path.
struct ScenarioError : std::runtime_error {
  explicit ScenarioError(std::vector<std::string> errs)
      : std::runtime_error(join(errs)), errors(std::move(errs)) {}
  std::vector<std::string> errors;

 private:
  static std::string join(const std::vector<std::string>& errs) {
    std::string out = "invalid scenario:";
    for (const auto& e : errs) out += "\n  " + e;
    return out;
  }
};

namespace detail {

struct Checker {
  std::vector<std::string> errors;

  void fail(const std::string& path, const std::string& msg) { errors.push_back(path + ": " + msg); }

  void known_keys(const nlohmann::json& j, const std::string& path,
                  const std::set<std::string>& allowed) {
    if (!j.is_object()) {
      fail(path, "expected an object");
      return;
    }
    for (const auto& [key, value] : j.items()) {
      if (!allowed.count(key)) fail(path + "." + key, "unknown field");
    }
  }

  bool has(const nlohmann::json& j, const std::string& path, const std::string& key) {
    if (j.is_object() && j.contains(key)) return true;
    fail(path + "." + key, "missing required field");
    return false;
  }

  std::optional<double> number(const nlohmann::json& j, const std::string& path,
                               const std::string& key) {
    if (!has(j, path, key)) return std::nullopt;
    if (!j.at(key).is_number()) {
      fail(path + "." + key, "expected a number");
      return std::nullopt;
    }
    return j.at(key).get<double>();
  }

  std::optional<std::int64_t> integer(const nlohmann::json& j, const std::string& path,
                                      const std::string& key) {
    if (!has(j, path, key)) return std::nullopt;
    if (!j.at(key).is_number_integer()) {
      fail(path + "." + key, "expected an integer");
      return std::nullopt;
    }
    return j.at(key).get<std::int64_t>();
  }

  std::optional<bool> boolean(const nlohmann::json& j, const std::string& path,
                              const std::string& key) {
    if (!has(j, path, key)) return std::nullopt;
    if (!j.at(key).is_boolean()) {
      fail(path + "." + key, "expected a boolean");
      return std::nullopt;
    }
    return j.at(key).get<bool>();
  }

  std::optional<SimTime> time(const nlohmann::json& j, const std::string& path,
                              const std::string& key, bool require_nonneg = true) {
    auto v = number(j, path, key);
    if (!v) return std::nullopt;
    if (require_nonneg && *v < 0) {
      fail(path + "." + key, "must be non-negative");
      return std::nullopt;
    }
    return SimTime::from_units(*v);
  }
};

}  // namespace detail

inline Scenario load_scenario_json(const nlohmann::json& j) {
  detail::Checker c;
  Scenario s;

  c.known_keys(j, "$",
               {"slb", "channel", "platoons", "world", "scripted_commands", "seed", "t_end"});
  if (!c.errors.empty() && !j.is_object()) throw ScenarioError(c.errors);

  if (c.has(j, "$", "slb")) {
    const auto& slb = j.at("slb");
    c.known_keys(slb, "slb", {"beacon_interval", "slot_offset", "slot_width"});
    if (auto v = c.time(slb, "slb", "beacon_interval")) s.slb.beacon_interval = *v;
    if (auto v = c.time(slb, "slb", "slot_offset")) s.slb.slot_offset = *v;
    if (auto v = c.time(slb, "slb", "slot_width")) s.slb.slot_width = *v;
    if (s.slb.beacon_interval.ticks <= 0) c.fail("slb.beacon_interval", "must be positive");
    if (s.slb.slot_width.ticks <= 0) c.fail("slb.slot_width", "must be positive");
    if (s.slb.slot_width > s.slb.slot_offset) {
      c.fail("slb", "slot_width (" + s.slb.slot_width.str() + ") must be <= slot_offset (" +
                        s.slb.slot_offset.str() + ")");
    }
  }

  if (c.has(j, "$", "channel")) {
    const auto& ch = j.at("channel");
    c.known_keys(ch, "channel",
                 {"loss_prob", "collisions_enabled", "priority_survives", "forced_losses"});
    if (auto v = c.number(ch, "channel", "loss_prob")) {
      if (*v < 0.0 || *v > 1.0) {
        c.fail("channel.loss_prob", "must be in [0,1]");
      } else {
        s.channel.loss_prob = *v;
      }
    }
    if (auto v = c.boolean(ch, "channel", "collisions_enabled")) s.channel.collisions_enabled = *v;
    if (auto v = c.boolean(ch, "channel", "priority_survives")) s.channel.priority_survives = *v;
    if (ch.is_object() && ch.contains("forced_losses")) {
      const auto& fl = ch.at("forced_losses");
      if (!fl.is_array()) {
        c.fail("channel.forced_losses", "expected an array");
      } else {
        for (std::size_t i = 0; i < fl.size(); ++i) {
          const std::string path = "channel.forced_losses[" + std::to_string(i) + "]";
          c.known_keys(fl[i], path, {"sender", "seq"});
          ForcedLoss f;
          if (auto v = c.integer(fl[i], path, "sender")) f.sender = static_cast<int>(*v);
          if (auto v = c.integer(fl[i], path, "seq")) f.seq = static_cast<std::uint64_t>(*v);
          s.channel.forced_losses.push_back(f);
        }
      }
    }
  }

  if (c.has(j, "$", "platoons")) {
    const auto& ps = j.at("platoons");
    if (!ps.is_array() || ps.empty()) {
      c.fail("platoons", "expected a non-empty array");
    } else {
      std::set<int> ids;
      for (std::size_t i = 0; i < ps.size(); ++i) {
        const std::string path = "platoons[" + std::to_string(i) + "]";
        const auto& p = ps[i];
        c.known_keys(p, path,
                     {"id", "size", "roles", "start_offset", "speed", "detector", "mission"});
        PlatoonSpec spec;
        if (auto v = c.integer(p, path, "id")) {
          spec.id = static_cast<int>(*v);
          if (!ids.insert(spec.id).second) c.fail(path + ".id", "duplicate platoon id");
        }
        if (auto v = c.integer(p, path, "size")) spec.size = static_cast<int>(*v);
        if (c.has(p, path, "roles")) {
          const auto& roles = p.at("roles");
          if (!roles.is_array()) {
            c.fail(path + ".roles", "expected an array");
          } else {
            for (std::size_t k = 0; k < roles.size(); ++k) {
              const std::string rp = path + ".roles[" + std::to_string(k) + "]";
              if (!roles[k].is_string()) {
                c.fail(rp, "expected a role name");
                continue;
              }
              auto r = parse_role(roles[k].get<std::string>());
              if (!r) {
                c.fail(rp, "unknown role: " + roles[k].get<std::string>());
              } else {
                spec.roles.push_back(*r);
              }
            }
            const int leaders =
                static_cast<int>(std::count(spec.roles.begin(), spec.roles.end(), Role::Leader));
            if (leaders != 1) c.fail(path + ".roles", "platoon must have exactly one Leader");
            if (!spec.roles.empty() && spec.roles[0] != Role::Leader) {
              c.fail(path + ".roles", "the Leader must be at position 0");
            }
            // Minimal two-agent platoons are allowed for protocol-only
            // experiments; full platoons need both specialist roles.
            if (spec.roles.size() >= 3) {
              if (std::count(spec.roles.begin(), spec.roles.end(), Role::Vision) == 0) {
                c.fail(path + ".roles", "platoon needs at least one Vision member");
              }
              if (std::count(spec.roles.begin(), spec.roles.end(), Role::Treatment) == 0) {
                c.fail(path + ".roles", "platoon needs at least one Treatment member");
              }
            }
            if (spec.size != static_cast<int>(spec.roles.size())) {
              c.fail(path + ".size", "size must equal the number of roles");
            }
          }
        }
        if (auto v = c.time(p, path, "start_offset")) spec.start_offset = *v;
        if (auto v = c.number(p, path, "speed")) {
          if (*v <= 0) {
            c.fail(path + ".speed", "must be positive");
          } else {
            spec.speed = *v;
          }
        }
        if (c.has(p, path, "detector")) {
          const auto& d = p.at("detector");
          const std::string dp = path + ".detector";
          c.known_keys(d, dp, {"true_positive_rate", "false_positive_rate", "sense_period",
                               "compute_round_trip"});
          if (auto v = c.number(d, dp, "true_positive_rate")) {
            if (*v < 0 || *v > 1) c.fail(dp + ".true_positive_rate", "must be in [0,1]");
            spec.detector.true_positive_rate = *v;
          }
          if (auto v = c.number(d, dp, "false_positive_rate")) {
            if (*v < 0 || *v > 1) c.fail(dp + ".false_positive_rate", "must be in [0,1]");
            spec.detector.false_positive_rate = *v;
          }
          if (auto v = c.time(d, dp, "sense_period")) {
            if (v->ticks <= 0) c.fail(dp + ".sense_period", "must be positive");
            spec.detector.sense_period = *v;
          }
          if (auto v = c.time(d, dp, "compute_round_trip")) spec.detector.compute_round_trip = *v;
        }
        if (c.has(p, path, "mission")) {
          const auto& m = p.at("mission");
          const std::string mp = path + ".mission";
          c.known_keys(m, mp, {"max_cycles", "treat_capacity", "treatment_duration"});
          if (auto v = c.integer(m, mp, "max_cycles")) {
            if (*v < 0) c.fail(mp + ".max_cycles", "must be non-negative");
            spec.mission.max_cycles = static_cast<int>(*v);
          }
          if (auto v = c.integer(m, mp, "treat_capacity")) {
            if (*v < -1) c.fail(mp + ".treat_capacity", "must be >= -1 (-1 = unlimited)");
            spec.mission.treat_capacity = *v;
          }
          if (auto v = c.time(m, mp, "treatment_duration")) {
            if (v->ticks <= 0) c.fail(mp + ".treatment_duration", "must be positive");
            spec.mission.treatment_duration = *v;
          }
        }
        if (spec.size > 0 && s.slb.beacon_interval.ticks > 0) {
          const SimTime lhs = s.slb.slot_offset * spec.size + s.slb.slot_width;
          if (lhs > s.slb.beacon_interval) {
            c.fail(path, "slots do not fit the interval: " + std::to_string(spec.size) + " * " +
                             s.slb.slot_offset.str() + " + " + s.slb.slot_width.str() + " = " +
                             lhs.str() + " > " + s.slb.beacon_interval.str());
          }
        }
        s.platoons.push_back(std::move(spec));
      }
    }
  }

  if (c.has(j, "$", "world")) {
    const auto& w = j.at("world");
    c.known_keys(w, "world", {"segments", "patrol_loop", "exit_path"});
    std::set<int> seg_ids;
    if (c.has(w, "world", "segments")) {
      const auto& segs = w.at("segments");
      if (!segs.is_array()) {
        c.fail("world.segments", "expected an array");
      } else {
        for (std::size_t i = 0; i < segs.size(); ++i) {
          const std::string path = "world.segments[" + std::to_string(i) + "]";
          c.known_keys(segs[i], path, {"id", "length", "target_cells"});
          SegmentDef def;
          if (auto v = c.integer(segs[i], path, "id")) {
            def.id = static_cast<int>(*v);
            if (!seg_ids.insert(def.id).second) c.fail(path + ".id", "duplicate segment id");
          }
          if (auto v = c.time(segs[i], path, "length")) {
            if (v->ticks <= 0) c.fail(path + ".length", "must be positive");
            def.length = *v;
          }
          if (auto v = c.integer(segs[i], path, "target_cells")) {
            if (*v < 0) c.fail(path + ".target_cells", "must be non-negative");
            def.target_cells = static_cast<int>(*v);
          }
          s.segments.push_back(def);
        }
      }
    }
    auto read_route = [&](const char* key, std::vector<int>& out) {
      if (!c.has(w, "world", key)) return;
      const auto& arr = w.at(key);
      if (!arr.is_array()) {
        c.fail(std::string("world.") + key, "expected an array of segment ids");
        return;
      }
      for (std::size_t i = 0; i < arr.size(); ++i) {
        const std::string path = std::string("world.") + key + "[" + std::to_string(i) + "]";
        if (!arr[i].is_number_integer()) {
          c.fail(path, "expected a segment id");
          continue;
        }
        const int id = arr[i].get<int>();
        if (!seg_ids.count(id)) c.fail(path, "references unknown segment " + std::to_string(id));
        out.push_back(id);
      }
    };
    read_route("patrol_loop", s.route.patrol_loop);
    read_route("exit_path", s.route.exit_path);
    if (s.route.patrol_loop.empty()) c.fail("world.patrol_loop", "must be non-empty");
    if (s.route.exit_path.empty()) {
      c.fail("world.exit_path", "must be non-empty");
    } else if (!s.route.patrol_loop.empty() &&
               std::find(s.route.patrol_loop.begin(), s.route.patrol_loop.end(),
                         s.route.exit_path.front()) == s.route.patrol_loop.end()) {
      c.fail("world.exit_path", "must start at a segment on the patrol loop");
    }
  }

  if (j.is_object() && j.contains("scripted_commands")) {
    const auto& cmds = j.at("scripted_commands");
    if (!cmds.is_array()) {
      c.fail("scripted_commands", "expected an array");
    } else {
      for (std::size_t i = 0; i < cmds.size(); ++i) {
        const std::string path = "scripted_commands[" + std::to_string(i) + "]";
        c.known_keys(cmds[i], path, {"time", "platoon", "command"});
        ScriptedCommand cmd;
        if (auto v = c.time(cmds[i], path, "time")) cmd.time = *v;
        if (auto v = c.integer(cmds[i], path, "platoon")) {
          cmd.platoon = static_cast<int>(*v);
          if (std::none_of(s.platoons.begin(), s.platoons.end(),
                           [&](const PlatoonSpec& p) { return p.id == cmd.platoon; })) {
            c.fail(path + ".platoon", "references unknown platoon " + std::to_string(cmd.platoon));
          }
        }
        if (c.has(cmds[i], path, "command")) {
          if (!cmds[i].at("command").is_string()) {
            c.fail(path + ".command", "expected a string");
          } else {
            cmd.command = cmds[i].at("command").get<std::string>();
            if (cmd.command != "halt" && cmd.command != "resume" && cmd.command != "exit") {
              c.fail(path + ".command", "unknown command: " + cmd.command);
            }
          }
        }
        s.scripted_commands.push_back(std::move(cmd));
      }
    }
  }

  if (auto v = c.integer(j, "$", "seed")) {
    if (*v < 0) c.fail("seed", "must be non-negative");
    s.seed = static_cast<std::uint64_t>(*v);
  }
  if (auto v = c.time(j, "$", "t_end")) s.t_end = *v;

  if (!c.errors.empty()) throw ScenarioError(std::move(c.errors));
  return s;
}

inline Scenario load_scenario_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ScenarioError({path + ": cannot open file"});
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(f);
  } catch (const nlohmann::json::parse_error& e) {
    throw ScenarioError({path + ": " + e.what()});
  }
  return load_scenario_json(j);
}

inline nlohmann::ordered_json to_json(const Scenario& s) {
  nlohmann::ordered_json j;
  j["slb"] = {{"beacon_interval", s.slb.beacon_interval.units()},
              {"slot_offset", s.slb.slot_offset.units()},
              {"slot_width", s.slb.slot_width.units()}};
  j["channel"] = {{"loss_prob", s.channel.loss_prob},
                  {"collisions_enabled", s.channel.collisions_enabled},
                  {"priority_survives", s.channel.priority_survives}};
  if (!s.channel.forced_losses.empty()) {
    auto& fl = j["channel"]["forced_losses"] = nlohmann::ordered_json::array();
    for (const auto& f : s.channel.forced_losses) fl.push_back({{"sender", f.sender}, {"seq", f.seq}});
  }
  j["platoons"] = nlohmann::ordered_json::array();
  for (const auto& p : s.platoons) {
    nlohmann::ordered_json roles = nlohmann::ordered_json::array();
    for (Role r : p.roles) roles.push_back(to_string(r));
    j["platoons"].push_back(
        {{"id", p.id},
         {"size", p.size},
         {"roles", roles},
         {"start_offset", p.start_offset.units()},
         {"speed", p.speed},
         {"detector",
          {{"true_positive_rate", p.detector.true_positive_rate},
           {"false_positive_rate", p.detector.false_positive_rate},
           {"sense_period", p.detector.sense_period.units()},
           {"compute_round_trip", p.detector.compute_round_trip.units()}}},
         {"mission",
          {{"max_cycles", p.mission.max_cycles},
           {"treat_capacity", p.mission.treat_capacity},
           {"treatment_duration", p.mission.treatment_duration.units()}}}});
  }
  auto& w = j["world"];
  w["segments"] = nlohmann::ordered_json::array();
  for (const auto& seg : s.segments) {
    w["segments"].push_back(
        {{"id", seg.id}, {"length", seg.length.units()}, {"target_cells", seg.target_cells}});
  }
  w["patrol_loop"] = s.route.patrol_loop;
  w["exit_path"] = s.route.exit_path;
  if (!s.scripted_commands.empty()) {
    j["scripted_commands"] = nlohmann::ordered_json::array();
    for (const auto& cmd : s.scripted_commands) {
      j["scripted_commands"].push_back(
          {{"time", cmd.time.units()}, {"platoon", cmd.platoon}, {"command", cmd.command}});
    }
  }
  j["seed"] = s.seed;
  j["t_end"] = s.t_end.units();
  return j;
}

// Dotted-path override "a.b.c=value"; array elements by numeric index.
// The value is parsed as JSON, falling back to a plain string.
inline void apply_override(nlohmann::json& j, const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos) throw ScenarioError({"override '" + spec + "': missing '='"});
  const std::string path = spec.substr(0, eq);
  const std::string raw = spec.substr(eq + 1);

  nlohmann::json value;
  try {
    value = nlohmann::json::parse(raw);
  } catch (const nlohmann::json::parse_error&) {
    value = raw;
  }

  nlohmann::json* node = &j;
  std::size_t pos = 0;
  while (true) {
    const auto dot = path.find('.', pos);
    const std::string key = path.substr(pos, dot == std::string::npos ? dot : dot - pos);
    const bool last = dot == std::string::npos;
    if (node->is_array()) {
      std::size_t idx = 0;
      try {
        idx = std::stoul(key);
      } catch (const std::exception&) {
        throw ScenarioError({"override '" + spec + "': '" + key + "' is not an array index"});
      }
      if (idx >= node->size()) {
        throw ScenarioError({"override '" + spec + "': index " + key + " out of range"});
      }
      node = &(*node)[idx];
    } else if (node->is_object()) {
      if (!node->contains(key)) {
        throw ScenarioError({"override '" + spec + "': unknown field '" + key + "'"});
      }
      node = &(*node)[key];
    } else {
      throw ScenarioError({"override '" + spec + "': '" + key + "' is not addressable"});
    }
    if (last) break;
    pos = dot + 1;
  }
  *node = value;
}

}  // namespace nanosim
