#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <mutex>
#include <map>
#include <memory>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "nanosim/channel.hpp"
#include "nanosim/engine.hpp"
#include "nanosim/metrics.hpp"
#include "nanosim/mission.hpp"
#include "nanosim/random.hpp"
#include "nanosim/replay.hpp"
#include "nanosim/scenario.hpp"
#include "nanosim/slb.hpp"
#include "nanosim/trace.hpp"

namespace nanosim {

struct RunResult {
  MetricsReport report;
  std::string trace_text;
  RunSummary summary;
  std::map<int, MissionState> final_states;  // platoon id -> mission state
  std::map<int, int> final_cycles;
  int remaining_cells = 0;
};

// One deterministic run: same scenario and seed give byte-identical traces.
inline RunResult run_scenario(const Scenario& s, bool keep_trace_text = true) {
  Engine engine;
  RandomStream rng(s.seed);
  TraceRecorder trace(keep_trace_text);
  trace.set_header(s.seed, s.t_end, s.total_agents(), s.slb.slot_width);
  MetricsCollector metrics(s.seed, s.t_end, s.total_agents(), s.slb.slot_width);
  trace.set_sink([&metrics](const TraceRecord& r) { metrics.on_record(r); });

  Channel channel(engine, rng, trace, s.channel, s.slb.slot_width);
  World world(s.segments);

  std::vector<std::unique_ptr<PlatoonMission>> missions;
  std::vector<std::unique_ptr<Agent>> agents;
  std::map<int, Agent*> by_id;
  std::map<int, Agent*> leaders;  // platoon id -> leader agent

  int next_agent_id = 0;
  for (const auto& spec : s.platoons) {
    auto mission = std::make_unique<PlatoonMission>(engine, world, trace, &metrics, s.route,
                                                    spec.mission, spec.id, spec.speed);
    int primary_treatment = -1;
    for (int pos = 0; pos < spec.size; ++pos) {
      if (spec.roles[pos] == Role::Treatment) {
        primary_treatment = pos;
        break;
      }
    }
    for (int pos = 0; pos < spec.size; ++pos) {
      auto agent = std::make_unique<Agent>(engine, channel, trace, rng, s.slb, next_agent_id,
                                           spec.id, spec.roles[pos], pos, mission.get(), &world,
                                           spec.detector, pos == primary_treatment);
      agent->set_treatment_duration(spec.mission.treatment_duration);
      by_id[next_agent_id] = agent.get();
      if (spec.roles[pos] == Role::Leader) leaders[spec.id] = agent.get();
      agents.push_back(std::move(agent));
      ++next_agent_id;
    }
    missions.push_back(std::move(mission));
  }

  std::vector<int> ids;
  ids.reserve(by_id.size());
  for (const auto& [id, agent] : by_id) ids.push_back(id);
  channel.set_agents(ids, [&by_id](int receiver, const Message& msg) {
    by_id.at(receiver)->handle_delivery(msg);
  });

  {
    std::size_t ai = 0;
    for (const auto& spec : s.platoons) {
      for (int pos = 0; pos < spec.size; ++pos) agents[ai++]->on_startup(spec.start_offset);
    }
  }
  {
    std::size_t mi = 0;
    for (const auto& spec : s.platoons) missions[mi++]->start(spec.start_offset);
  }
  for (const auto& cmd : s.scripted_commands) {
    Agent* leader = leaders.at(cmd.platoon);
    engine.schedule(cmd.time, EventKind::ScenarioCommand,
                    [leader, command = cmd.command] { leader->scripted_command(command); });
  }

  RunResult result;
  result.summary = engine.run_until(s.t_end);
  result.report = metrics.finalize();
  if (keep_trace_text) result.trace_text = trace.text();
  for (const auto& m : missions) {
    result.final_states[m->platoon_id()] = m->state();
    result.final_cycles[m->platoon_id()] = m->cycles_completed();
  }
  result.remaining_cells = world.total_cells();
  return result;
}

// ---- Parameter sweeps -------------------------------------------------

struct SweepGrid {
  // Parameter paths with their candidate values, in file order.
  std::vector<std::pair<std::string, std::vector<nlohmann::json>>> params;

  std::size_t points() const {
    std::size_t n = 1;
    for (const auto& [path, values] : params) n *= values.size();
    return n;
  }

  // The i-th grid point as one value per parameter.
  std::vector<nlohmann::json> point(std::size_t index) const {
    std::vector<nlohmann::json> out;
    for (auto it = params.rbegin(); it != params.rend(); ++it) {
      out.push_back(it->second[index % it->second.size()]);
      index /= it->second.size();
    }
    std::reverse(out.begin(), out.end());
    return out;
  }
};

inline SweepGrid load_grid_json(const nlohmann::json& j) {
  const nlohmann::json* grid = &j;
  if (j.is_object() && j.contains("grid")) grid = &j.at("grid");
  if (!grid->is_object() || grid->empty()) {
    throw ScenarioError({"grid: expected a non-empty object of {parameter path: [values]}"});
  }
  SweepGrid g;
  for (const auto& [path, values] : grid->items()) {
    if (!values.is_array() || values.empty()) {
      throw ScenarioError({"grid." + path + ": expected a non-empty array of values"});
    }
    g.params.emplace_back(path, std::vector<nlohmann::json>(values.begin(), values.end()));
  }
  return g;
}

inline SweepGrid load_grid_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ScenarioError({path + ": cannot open file"});
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(f);
  } catch (const nlohmann::json::parse_error& e) {
    throw ScenarioError({path + ": " + e.what()});
  }
  return load_grid_json(j);
}

struct SweepRow {
  std::vector<nlohmann::json> grid_values;
  MetricsReport report;
};

// One run per grid point x seed. Runs are isolated, so they may execute on
// several workers; results are merged in (grid point, seed) order, making
// the output independent of scheduling.
inline std::vector<SweepRow> run_sweep(const nlohmann::json& base_scenario, const SweepGrid& grid,
                                       const std::vector<std::uint64_t>& seeds,
                                       unsigned jobs = std::thread::hardware_concurrency()) {
  if (seeds.empty()) throw ScenarioError({"sweep: empty seed list"});

  // Validate every parameter path before any run starts.
  {
    nlohmann::json probe = base_scenario;
    const auto values = grid.point(0);
    for (std::size_t i = 0; i < grid.params.size(); ++i) {
      apply_override(probe, grid.params[i].first + "=" + values[i].dump());
    }
    load_scenario_json(probe);
  }

  const std::size_t total = grid.points() * seeds.size();
  std::vector<SweepRow> rows(total);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;

  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= total) return;
      try {
        const std::size_t point = i / seeds.size();
        const std::uint64_t seed = seeds[i % seeds.size()];
        nlohmann::json doc = base_scenario;
        const auto values = grid.point(point);
        for (std::size_t k = 0; k < grid.params.size(); ++k) {
          apply_override(doc, grid.params[k].first + "=" + values[k].dump());
        }
        doc["seed"] = seed;
        Scenario s = load_scenario_json(doc);
        rows[i].grid_values = values;
        rows[i].report = run_scenario(s, /*keep_trace_text=*/false).report;
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mu);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };

  const unsigned n_workers = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(total)));
  std::vector<std::thread> threads;
  threads.reserve(n_workers);
  for (unsigned t = 0; t < n_workers; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
  return rows;
}

inline std::string sweep_csv(const SweepGrid& grid, const std::vector<SweepRow>& rows) {
  std::string out = MetricsReport::csv_header();
  for (const auto& [path, values] : grid.params) out += ',' + path;
  out += '\n';
  for (const auto& row : rows) {
    out += row.report.csv_row();
    for (const auto& v : row.grid_values) out += ',' + v.dump();
    out += '\n';
  }
  return out;
}

// Per-grid-point mean and population standard deviation of a metric column.
struct SweepStats {
  std::vector<nlohmann::json> grid_values;
  double mean = 0.0;
  double stddev = 0.0;
};

inline std::vector<SweepStats> summarize_sweep(const SweepGrid& grid,
                                               const std::vector<SweepRow>& rows,
                                               double (*metric)(const MetricsReport&)) {
  const std::size_t points = grid.points();
  const std::size_t seeds = points > 0 ? rows.size() / points : 0;
  std::vector<SweepStats> out;
  for (std::size_t p = 0; p < points; ++p) {
    SweepStats st;
    st.grid_values = grid.point(p);
    double sum = 0.0, sq = 0.0;
    for (std::size_t k = 0; k < seeds; ++k) {
      const double v = metric(rows[p * seeds + k].report);
      sum += v;
      sq += v * v;
    }
    const double n = static_cast<double>(seeds);
    st.mean = seeds > 0 ? sum / n : 0.0;
    const double var = seeds > 0 ? sq / n - st.mean * st.mean : 0.0;
    st.stddev = var > 0.0 ? std::sqrt(var) : 0.0;
    out.push_back(std::move(st));
  }
  return out;
}

}  // namespace nanosim
