/*
 * Online lifelong simulation: plan every timestep, execute only the first
 * action of each agent's operation, complete goals and hand out the next task
 * from the pool. Also the action-log format and an independent log validator.
 */
#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "distance.hpp"
#include "grid.hpp"
#include "lns.hpp"
#include "operations.hpp"
#include "planner.hpp"
#include "scenario.hpp"

namespace epibt {

// Agent k's j-th task is pool[(k + j * n) mod |pool|]; increments `counter`.
inline CellId assign_next_task(std::size_t agent, std::size_t num_agents, std::span<const CellId> pool,
                               std::uint64_t& counter) {
  if (pool.empty()) throw std::invalid_argument("task pool is empty");
  const std::uint64_t idx = (static_cast<std::uint64_t>(agent) + counter * num_agents) % pool.size();
  ++counter;
  return pool[idx];
}

// Executed actions, one string of agent-ordered letters per timestep.
struct ActionLog {
  ActionModel model = ActionModel::rotation;
  std::vector<AgentState> starts;
  std::vector<std::string> steps;

  friend bool operator==(const ActionLog&, const ActionLog&) = default;
};

// Format:
//   # epibt action log
//   model rotation
//   agents <n>
//   start <row> <col> <N|E|S|W>     (n lines)
//   steps <T>
//   <n letters>                      (T lines)
inline std::string serialize_log(const ActionLog& log, const GridMap& map) {
  std::string out = "# epibt action log\nmodel " + std::string(to_string(log.model)) + "\nagents " +
                    std::to_string(log.starts.size()) + "\n";
  for (const AgentState& s : log.starts) {
    const Position p = map.position(s.cell);
    out += "start " + std::to_string(p.row) + " " + std::to_string(p.col) + " " + orientation_letter(s.orientation) + "\n";
  }
  out += "steps " + std::to_string(log.steps.size()) + "\n";
  for (const std::string& s : log.steps) out += s + "\n";
  return out;
}

inline ActionLog parse_log(std::string_view text, const GridMap& map) {
  ActionLog log;
  const auto lines = detail::split_lines(text);
  std::size_t i = 0;
  auto next = [&]() -> std::vector<std::string> {
    while (i < lines.size()) {
      auto w = detail::split_words(lines[i++]);
      if (!w.empty() && w[0][0] != '#') return w;
    }
    throw ParseError("unexpected end of log", static_cast<int>(lines.size()) + 1);
  };
  auto w = next();
  std::optional<ActionModel> model;
  if (w.size() != 2 || w[0] != "model" || !(model = parse_action_model(w[1]))) throw ParseError("expected 'model <name>'", static_cast<int>(i));
  log.model = *model;
  w = next();
  long long n = 0;
  if (w.size() != 2 || w[0] != "agents" || !detail::parse_int(w[1], n) || n < 0) throw ParseError("expected 'agents <n>'", static_cast<int>(i));
  for (long long k = 0; k < n; ++k) {
    w = next();
    long long r = 0, c = 0;
    std::optional<Orientation> o;
    if (w.size() != 4 || w[0] != "start" || !detail::parse_int(w[1], r) || !detail::parse_int(w[2], c) ||
        !(o = parse_orientation(w[3])))
      throw ParseError("expected 'start <row> <col> <orientation>'", static_cast<int>(i));
    const CellId cell = map.cell_at(static_cast<int>(r), static_cast<int>(c));
    if (cell == kNoCell) throw ParseError("start cell is not passable", static_cast<int>(i));
    log.starts.push_back({cell, *o});
  }
  w = next();
  long long steps = 0;
  if (w.size() != 2 || w[0] != "steps" || !detail::parse_int(w[1], steps) || steps < 0)
    throw ParseError("expected 'steps <T>'", static_cast<int>(i));
  for (long long t = 0; t < steps; ++t) {
    if (i >= lines.size()) throw ParseError("log truncated: expected " + std::to_string(steps) + " steps", static_cast<int>(i) + 1);
    const std::string& line = lines[i++];
    if (static_cast<long long>(line.size()) != n)
      throw ParseError("step line has " + std::to_string(line.size()) + " actions, expected " + std::to_string(n), static_cast<int>(i));
    for (std::size_t c = 0; c < line.size(); ++c)
      if (!parse_action(line[c], log.model)) throw ParseError(std::string("unknown action '") + line[c] + "'", static_cast<int>(i), static_cast<int>(c) + 1);
    log.steps.push_back(line);
  }
  for (; i < lines.size(); ++i)
    if (!detail::split_words(lines[i]).empty()) throw ParseError("trailing content after log", static_cast<int>(i) + 1);
  return log;
}

struct Violation {
  enum class Kind : std::uint8_t { vertex, swap, illegal_action };
  int timestep = 0;  // step whose execution produced the violation (0-based)
  Kind kind = Kind::vertex;
  AgentId first = kNoAgent;
  AgentId second = kNoAgent;
  std::string detail;
};

inline std::string describe(const Violation& v) {
  const char* kind = v.kind == Violation::Kind::vertex ? "vertex" : (v.kind == Violation::Kind::swap ? "swap" : "illegal");
  std::string s = "t=" + std::to_string(v.timestep) + " " + kind + " agents " + std::to_string(v.first);
  if (v.second != kNoAgent) s += "," + std::to_string(v.second);
  if (!v.detail.empty()) s += " " + v.detail;
  return s;
}

namespace detail {

// Advances `states` by one joint action and appends any violations. Works on
// plain (row, col) coordinates so it shares nothing with the planner.
inline void check_joint_step(const GridMap& map, ActionModel model, std::vector<Position>& pos,
                             std::vector<Orientation>& ori, std::string_view actions, int t,
                             std::vector<Violation>& out) {
  const std::size_t n = pos.size();
  std::vector<Position> next = pos;
  for (std::size_t k = 0; k < n; ++k) {
    const char a = actions[k];
    Position p = pos[k];
    if (model == ActionModel::rotation) {
      const int o = static_cast<int>(ori[k]);
      if (a == 'F') {
        static constexpr int dr[4] = {-1, 0, 1, 0}, dc[4] = {0, 1, 0, -1};
        p = {p.row + dr[o], p.col + dc[o]};
      } else if (a == 'R') {
        ori[k] = static_cast<Orientation>((o + 1) % 4);
      } else if (a == 'C') {
        ori[k] = static_cast<Orientation>((o + 3) % 4);
      } else if (a != 'W') {
        out.push_back({t, Violation::Kind::illegal_action, static_cast<AgentId>(k), kNoAgent, std::string("unknown action ") + a});
      }
    } else {
      if (a == 'U') p.row -= 1;
      else if (a == 'D') p.row += 1;
      else if (a == 'L') p.col -= 1;
      else if (a == 'R') p.col += 1;
      else if (a != 'W') out.push_back({t, Violation::Kind::illegal_action, static_cast<AgentId>(k), kNoAgent, std::string("unknown action ") + a});
    }
    if (!map.is_passable(p.row, p.col)) {
      out.push_back({t, Violation::Kind::illegal_action, static_cast<AgentId>(k), kNoAgent,
                     "moves onto blocked/outside cell (" + std::to_string(p.row) + "," + std::to_string(p.col) + ")"});
      p = pos[k];
    }
    next[k] = p;
  }
  // vertex: sort agent ids by destination
  std::vector<std::pair<std::int64_t, std::size_t>> dest;
  dest.reserve(n);
  for (std::size_t k = 0; k < n; ++k) dest.push_back({static_cast<std::int64_t>(next[k].row) * map.width() + next[k].col, k});
  std::sort(dest.begin(), dest.end());
  for (std::size_t i = 1; i < n; ++i)
    if (dest[i].first == dest[i - 1].first)
      out.push_back({t, Violation::Kind::vertex, static_cast<AgentId>(dest[i - 1].second), static_cast<AgentId>(dest[i].second),
                     "at (" + std::to_string(next[dest[i].second].row) + "," + std::to_string(next[dest[i].second].col) + ")"});
  // swap: agent k moved a->b and some l moved b->a
  std::vector<std::pair<std::int64_t, std::size_t>> origin;
  for (std::size_t k = 0; k < n; ++k) origin.push_back({static_cast<std::int64_t>(pos[k].row) * map.width() + pos[k].col, k});
  std::sort(origin.begin(), origin.end());
  for (std::size_t k = 0; k < n; ++k) {
    if (next[k] == pos[k]) continue;
    const std::int64_t key = static_cast<std::int64_t>(next[k].row) * map.width() + next[k].col;
    const auto it = std::lower_bound(origin.begin(), origin.end(), std::make_pair(key, std::size_t{0}));
    if (it == origin.end() || it->first != key) continue;
    const std::size_t l = it->second;
    if (l > k && next[l] == pos[k])
      out.push_back({t, Violation::Kind::swap, static_cast<AgentId>(k), static_cast<AgentId>(l), ""});
  }
  pos = std::move(next);
}

}  // namespace detail

// Re-simulates the log from its start states and reports every illegal
// action, vertex collision and swap collision.
inline std::vector<Violation> validate_log(const ActionLog& log, const GridMap& map) {
  std::vector<Violation> out;
  std::vector<Position> pos;
  std::vector<Orientation> ori;
  for (const AgentState& s : log.starts) {
    pos.push_back(map.position(s.cell));
    ori.push_back(s.orientation);
  }
  for (std::size_t k = 1; k < pos.size(); ++k)
    for (std::size_t l = 0; l < k; ++l)
      if (pos[k] == pos[l]) out.push_back({-1, Violation::Kind::vertex, static_cast<AgentId>(l), static_cast<AgentId>(k), "shared start"});
  for (std::size_t t = 0; t < log.steps.size(); ++t) {
    if (log.steps[t].size() != pos.size()) {
      out.push_back({static_cast<int>(t), Violation::Kind::illegal_action, kNoAgent, kNoAgent, "wrong number of actions"});
      continue;
    }
    detail::check_joint_step(map, log.model, pos, ori, log.steps[t], static_cast<int>(t), out);
  }
  return out;
}

struct SimConfig {
  Scenario scenario;
  SolverConfig solver;
  std::optional<LnsBudget> lns;
  // Wall-clock step budget in seconds; 0 disables it. Overrunning by a started
  // budget period inserts one all-wait timestep per period.
  double step_budget_seconds = 0.0;
  int horizon = 0;  // 0 = scenario horizon
  std::uint64_t seed = 0;
  EdgeWeights weights;
  std::size_t cache_capacity = 0;  // 0 = 2 * agents
  bool record_lns_trace = false;
};

struct SimMetrics {
  std::uint64_t goals_completed = 0;
  int horizon = 0;
  double throughput = 0.0;
  std::vector<double> step_ms;
  std::vector<std::uint64_t> wait_heatmap;  // per cell id
  ActionLog log;
  std::uint64_t delay_steps = 0;
  std::uint64_t failed_agent_steps = 0;
  std::uint64_t lns_iterations = 0;
  std::uint64_t lns_accepted = 0;
  // LNS calls whose metric trace increased at some point; must stay 0.
  std::uint64_t lns_monotonicity_violations = 0;
  // LNS calls whose incremental metric differed from a full recomputation.
  std::uint64_t lns_metric_mismatches = 0;
  std::uint64_t max_select_calls = 0;

  double mean_step_ms() const {
    if (step_ms.empty()) return 0.0;
    double s = 0;
    for (double v : step_ms) s += v;
    return s / static_cast<double>(step_ms.size());
  }
  double max_step_ms() const { return step_ms.empty() ? 0.0 : *std::max_element(step_ms.begin(), step_ms.end()); }
};

class SimulationError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

inline SimMetrics run(const GridMap& map, const SimConfig& cfg) {
  using Clock = std::chrono::steady_clock;
  const Scenario& sc = cfg.scenario;
  validate_scenario(sc, map);
  SolverConfig scfg = cfg.solver;
  scfg.model = sc.model;
  if (scfg.seed == 0) scfg.seed = cfg.seed;
  Planner planner(map, scfg);
  const std::size_t n = sc.num_agents();
  const int horizon = cfg.horizon > 0 ? cfg.horizon : sc.horizon;
  DistanceCache cache(map, sc.model, cfg.cache_capacity ? cfg.cache_capacity : std::max<std::size_t>(1, 2 * n), cfg.weights);
  const bool wall_clock = cfg.step_budget_seconds > 0.0;

  SimMetrics m;
  m.horizon = horizon;
  m.wait_heatmap.assign(map.num_cells(), 0);
  m.log.model = sc.model;
  m.log.starts = sc.agents;

  std::vector<AgentState> states = sc.agents;
  std::vector<std::uint64_t> counters(n, 0);
  std::vector<CellId> goals(n);
  for (std::size_t k = 0; k < n; ++k) goals[k] = assign_next_task(k, n, sc.task_pool, counters[k]);

  std::vector<Position> check_pos;
  std::vector<Orientation> check_ori;
  for (const AgentState& s : states) {
    check_pos.push_back(map.position(s.cell));
    check_ori.push_back(s.orientation);
  }

  auto execute = [&](const std::string& joint, int t) {
    std::vector<Violation> v;
    detail::check_joint_step(map, sc.model, check_pos, check_ori, joint, t, v);
    if (!v.empty()) throw SimulationError("collision at timestep " + std::to_string(t) + ": " + describe(v.front()));
    for (std::size_t k = 0; k < n; ++k) {
      if (joint[k] == 'W') ++m.wait_heatmap[static_cast<std::size_t>(states[k].cell)];
      states[k] = apply_action(map, states[k], joint[k], sc.model);
    }
    m.log.steps.push_back(joint);
  };

  std::vector<int> inherited = planner.inherited_from(nullptr, n);
  std::vector<std::shared_ptr<const DistanceMap>> held(n);
  std::vector<const DistanceMap*> dmaps(n);
  std::string joint(n, 'W');
  int t = 0;
  while (t < horizon) {
    auto t0 = Clock::now();
    if (!wall_clock) {
      for (std::size_t k = 0; k < n; ++k) {
        held[k] = cache.get(goals[k]);
        dmaps[k] = held[k].get();
      }
      t0 = Clock::now();
    } else {
      for (std::size_t k = 0; k < n; ++k) {
        held[k] = cache.get(goals[k]);
        dmaps[k] = held[k].get();
      }
    }
    std::optional<Clock::time_point> deadline;
    if (wall_clock) deadline = t0 + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(cfg.step_budget_seconds));
    StepResult step = planner.plan_step(states, dmaps, inherited, static_cast<std::uint64_t>(t), deadline);
    m.max_select_calls = std::max<std::uint64_t>(m.max_select_calls, step.select_calls);
    if (cfg.lns && cfg.lns->limit > 0) {
      LnsOptions opts;
      opts.record_trace = cfg.record_lns_trace;
      const std::uint64_t lns_seed = cfg.seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(t);
      const LnsStats st = improve(planner, *cfg.lns, lns_seed, opts);
      m.lns_iterations += st.iterations;
      m.lns_accepted += st.accepted;
      for (std::size_t i = 1; i < st.trace.size(); ++i)
        if (st.trace[i] > st.trace[i - 1]) {
          ++m.lns_monotonicity_violations;
          break;
        }
      if (st.metric_after > st.metric_before || (cfg.record_lns_trace && metric(planner) != st.metric_after))
        ++m.lns_metric_mismatches;
      step = planner.result();
    }
    const double elapsed = std::chrono::duration<double>(Clock::now() - t0).count();
    m.step_ms.push_back(elapsed * 1000.0);

    if (wall_clock && elapsed > cfg.step_budget_seconds) {
      const auto delay = static_cast<int>(std::ceil((elapsed - cfg.step_budget_seconds) / cfg.step_budget_seconds));
      for (int d = 0; d < delay && t < horizon; ++d, ++t) {
        execute(std::string(n, 'W'), t);
        ++m.delay_steps;
      }
      if (t >= horizon) break;
    }

    for (std::size_t k = 0; k < n; ++k) {
      joint[k] = step.first_action(static_cast<AgentId>(k));
      if (!step.success[k]) ++m.failed_agent_steps;
    }
    execute(joint, t);
    ++t;
    for (std::size_t k = 0; k < n; ++k) {
      if (states[k].cell == goals[k]) {
        ++m.goals_completed;
        goals[k] = assign_next_task(k, n, sc.task_pool, counters[k]);
      }
    }
    inherited = planner.inherited_from(&step, n);
  }
  m.throughput = static_cast<double>(m.goals_completed) / static_cast<double>(horizon);
  return m;
}

}  // namespace epibt
