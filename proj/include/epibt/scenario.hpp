/*
 * Lifelong scenarios: agent starts, an ordered task pool, horizon and action
 * model. Line-oriented text format:
 *
 *   # comment
 *   horizon 1000
 *   model rotation              (or omnidirectional)
 *   default_orientation N       (optional, N when absent)
 *   a <row> <col> [N|E|S|W]     one line per agent, in agent-id order
 *   t <row> <col>               one line per task, in pool order
 */
#pragma once

#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "grid.hpp"

namespace epibt {

struct Scenario {
  std::vector<AgentState> agents;
  std::vector<CellId> task_pool;
  int horizon = 1;
  ActionModel model = ActionModel::rotation;

  std::size_t num_agents() const { return agents.size(); }
};

class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << content;
}

// Throws ScenarioError when the scenario's invariants do not hold on `map`.
inline void validate_scenario(const Scenario& s, const GridMap& map) {
  if (s.horizon < 1) throw ScenarioError("horizon must be >= 1");
  if (s.task_pool.empty()) throw ScenarioError("task pool is empty");
  std::set<CellId> starts;
  for (std::size_t k = 0; k < s.agents.size(); ++k) {
    const CellId c = s.agents[k].cell;
    if (c < 0 || static_cast<std::size_t>(c) >= map.num_cells())
      throw ScenarioError("agent " + std::to_string(k) + " starts on an unknown cell");
    if (!starts.insert(c).second) throw ScenarioError("agent " + std::to_string(k) + " shares its start cell");
  }
  for (std::size_t j = 0; j < s.task_pool.size(); ++j) {
    const CellId c = s.task_pool[j];
    if (c < 0 || static_cast<std::size_t>(c) >= map.num_cells())
      throw ScenarioError("task " + std::to_string(j) + " is not a passable cell");
  }
}

inline Scenario load_scenario(std::string_view text, const GridMap& map) {
  Scenario s;
  Orientation default_orientation = Orientation::north;
  struct PendingAgent {
    CellId cell;
    std::optional<Orientation> orientation;
  };
  std::vector<PendingAgent> pending;
  std::set<CellId> starts;
  bool saw_horizon = false;

  const auto lines = detail::split_lines(text);
  auto cell_from = [&](const std::vector<std::string>& w, int line_no) {
    long long r = 0, c = 0;
    if (!detail::parse_int(w[1], r) || !detail::parse_int(w[2], c))
      throw ParseError("expected integer <row> <col>", line_no);
    if (!map.in_bounds(static_cast<int>(r), static_cast<int>(c)))
      throw ScenarioError("line " + std::to_string(line_no) + ": cell (" + w[1] + "," + w[2] + ") is outside the map");
    const CellId cell = map.cell_at(static_cast<int>(r), static_cast<int>(c));
    if (cell == kNoCell)
      throw ScenarioError("line " + std::to_string(line_no) + ": cell (" + w[1] + "," + w[2] + ") is blocked");
    return cell;
  };

  for (std::size_t i = 0; i < lines.size(); ++i) {
    const int line_no = static_cast<int>(i) + 1;
    const auto w = detail::split_words(lines[i]);
    if (w.empty() || w[0][0] == '#') continue;
    const std::string& key = w[0];
    if (key == "horizon") {
      long long h = 0;
      if (w.size() != 2 || !detail::parse_int(w[1], h)) throw ParseError("malformed 'horizon'", line_no);
      if (h < 1) throw ScenarioError("line " + std::to_string(line_no) + ": horizon must be >= 1");
      s.horizon = static_cast<int>(h);
      saw_horizon = true;
    } else if (key == "model") {
      const auto m = w.size() == 2 ? parse_action_model(w[1]) : std::nullopt;
      if (!m) throw ParseError("malformed 'model' (rotation|omnidirectional)", line_no);
      s.model = *m;
    } else if (key == "default_orientation") {
      const auto o = w.size() == 2 ? parse_orientation(w[1]) : std::nullopt;
      if (!o) throw ParseError("malformed 'default_orientation'", line_no);
      default_orientation = *o;
    } else if (key == "a") {
      if (w.size() != 3 && w.size() != 4) throw ParseError("agent line is 'a <row> <col> [N|E|S|W]'", line_no);
      const CellId cell = cell_from(w, line_no);
      std::optional<Orientation> o;
      if (w.size() == 4) {
        o = parse_orientation(w[3]);
        if (!o) throw ParseError("unknown orientation '" + w[3] + "'", line_no);
      }
      if (!starts.insert(cell).second)
        throw ScenarioError("line " + std::to_string(line_no) + ": two agents share start cell (" + w[1] + "," +
                            w[2] + ")");
      pending.push_back({cell, o});
    } else if (key == "t") {
      if (w.size() != 3) throw ParseError("task line is 't <row> <col>'", line_no);
      s.task_pool.push_back(cell_from(w, line_no));
    } else {
      throw ParseError("unknown key '" + key + "'", line_no);
    }
  }
  if (!saw_horizon) throw ParseError("missing 'horizon'", static_cast<int>(lines.size()) + 1);
  if (s.task_pool.empty()) throw ScenarioError("task pool is empty");
  for (const auto& a : pending) s.agents.push_back({a.cell, a.orientation.value_or(default_orientation)});
  return s;
}

inline std::string serialize_scenario(const Scenario& s, const GridMap& map) {
  std::ostringstream os;
  os << "horizon " << s.horizon << "\nmodel " << to_string(s.model) << "\n";
  for (const auto& a : s.agents) {
    const Position p = map.position(a.cell);
    os << "a " << p.row << " " << p.col << " " << orientation_letter(a.orientation) << "\n";
  }
  for (CellId g : s.task_pool) {
    const Position p = map.position(g);
    os << "t " << p.row << " " << p.col << "\n";
  }
  return os.str();
}

}  // namespace epibt
