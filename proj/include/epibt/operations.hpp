/*
 * Multi-action operations.
 *
 * An operation is a fixed-length action sequence identified by the cells it
 * occupies at t+1..t+len. Every raw action string of the given length maps to
 * exactly one operation; strings that occupy the same cells are merged and the
 * final orientations they can reach are kept as terminal states, each with the
 * cheapest action string that realizes it. Rotation-model operations are
 * stored relative to a north-facing start and precomputed for all four start
 * orientations; omnidirectional moves are absolute.
 */
#pragma once

#include <algorithm>
#include <array>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "grid.hpp"

namespace epibt {

enum class Action : std::uint8_t { forward, rotate_cw, rotate_ccw, wait, up, right, down, left };

enum class ActionClass : std::uint8_t { move, rotate, wait };

inline constexpr int kMaxOpLength = 5;

inline char action_letter(Action a) {
  switch (a) {
    case Action::forward: return 'F';
    case Action::rotate_cw: return 'R';
    case Action::rotate_ccw: return 'C';
    case Action::wait: return 'W';
    case Action::up: return 'U';
    case Action::right: return 'R';
    case Action::down: return 'D';
    case Action::left: return 'L';
  }
  return '?';
}

// Rotation model: F R C W. Omnidirectional model: U R D L W.
inline std::optional<Action> parse_action(char c, ActionModel model) {
  if (model == ActionModel::rotation) {
    switch (c) {
      case 'F': return Action::forward;
      case 'R': return Action::rotate_cw;
      case 'C': return Action::rotate_ccw;
      case 'W': return Action::wait;
      default: return std::nullopt;
    }
  }
  switch (c) {
    case 'U': return Action::up;
    case 'R': return Action::right;
    case 'D': return Action::down;
    case 'L': return Action::left;
    case 'W': return Action::wait;
    default: return std::nullopt;
  }
}

inline std::string_view action_alphabet(ActionModel model) { return model == ActionModel::rotation ? "FRCW" : "URDLW"; }

inline ActionClass action_class(char letter, ActionModel model) {
  if (letter == 'W') return ActionClass::wait;
  if (model == ActionModel::rotation && (letter == 'R' || letter == 'C')) return ActionClass::rotate;
  return ActionClass::move;
}

// Absolute direction an omnidirectional move letter heads in.
inline std::optional<Orientation> omni_direction(char letter) {
  switch (letter) {
    case 'U': return Orientation::north;
    case 'R': return Orientation::east;
    case 'D': return Orientation::south;
    case 'L': return Orientation::west;
    default: return std::nullopt;
  }
}

// One action applied to a state; the cell may become kNoCell when the move
// leaves the passable area.
inline AgentState apply_action(const GridMap& map, AgentState s, char letter, ActionModel model) {
  if (model == ActionModel::rotation) {
    switch (letter) {
      case 'F': return {map.step(s.cell, s.orientation), s.orientation};
      case 'R': return {s.cell, clockwise(s.orientation)};
      case 'C': return {s.cell, counterclockwise(s.orientation)};
      default: return s;
    }
  }
  if (const auto d = omni_direction(letter)) return {map.step(s.cell, *d), s.orientation};
  return s;
}

inline constexpr std::int8_t kStay = -1;

struct Terminal {
  Orientation orientation = Orientation::north;  // absolute, for the given start orientation
  std::string actions;                           // cheapest raw string reaching it
};

struct Operation {
  std::string actions;  // canonical representative
  // Indexed by start orientation.
  std::array<std::vector<std::int8_t>, 4> moves;  // per step: kStay or absolute direction index
  std::array<std::vector<Position>, 4> signature;  // occupied offsets at t+1..t+len
  std::array<std::vector<Terminal>, 4> terminals;  // sorted by realizing-string preference

  std::size_t length() const { return actions.size(); }
};

struct ReachableStats {
  std::size_t cells = 0;
  std::size_t states = 0;
  std::size_t sequences = 0;
  friend bool operator==(const ReachableStats&, const ReachableStats&) = default;
};

class OperationSet {
 public:
  OperationSet() = default;
  OperationSet(ActionModel model, int length, std::vector<Operation> ops) : model_(model), length_(length), ops_(std::move(ops)) {
    for (std::size_t i = 0; i < ops_.size(); ++i) {
      const std::string key = signature_key(ops_[i].actions);
      if (!by_signature_.emplace(key, static_cast<int>(i)).second)
        throw std::invalid_argument("duplicate operation signature for " + ops_[i].actions);
    }
    wait_index_ = find(std::string(static_cast<std::size_t>(length_), 'W')).value_or(-1);
  }

  ActionModel model() const { return model_; }
  int op_length() const { return length_; }
  std::size_t size() const { return ops_.size(); }
  const Operation& operator[](std::size_t i) const { return ops_[i]; }
  const std::vector<Operation>& operations() const { return ops_; }
  auto begin() const { return ops_.begin(); }
  auto end() const { return ops_.end(); }

  // Index of the all-wait operation, or -1 when the set lacks one.
  int wait_index() const { return wait_index_; }

  // Operation whose occupied cells equal those of the raw action string
  // (interpreted from a north-facing start).
  std::optional<int> find(std::string_view raw_actions) const {
    if (static_cast<int>(raw_actions.size()) != length_) return std::nullopt;
    for (char ch : raw_actions)
      if (!parse_action(ch, model_)) return std::nullopt;
    const auto it = by_signature_.find(signature_key(raw_actions));
    if (it == by_signature_.end()) return std::nullopt;
    return it->second;
  }

  // Encodes the per-step moves of a raw string from a north-facing start.
  std::string signature_key(std::string_view raw) const {
    std::string key;
    key.reserve(raw.size());
    Orientation o = Orientation::north;
    for (char ch : raw) {
      std::int8_t move = kStay;
      if (model_ == ActionModel::rotation) {
        if (ch == 'F') move = static_cast<std::int8_t>(index_of(o));
        else if (ch == 'R') o = clockwise(o);
        else if (ch == 'C') o = counterclockwise(o);
      } else if (const auto d = omni_direction(ch)) {
        move = static_cast<std::int8_t>(index_of(*d));
      }
      key.push_back(static_cast<char>('0' + move + 1));
    }
    return key;
  }

 private:
  ActionModel model_ = ActionModel::rotation;
  int length_ = 0;
  std::vector<Operation> ops_;
  std::map<std::string, int> by_signature_;
  int wait_index_ = -1;
};

namespace detail {

// Preference between raw strings: fewer rotations first, then lexicographic
// over the model alphabet (F < R < C < W, or U < R < D < L < W).
inline std::string realization_key(std::string_view raw, ActionModel model) {
  const std::string_view alphabet = action_alphabet(model);
  int rotations = 0;
  std::string key(1, '\0');
  for (char ch : raw) {
    if (model == ActionModel::rotation && (ch == 'R' || ch == 'C')) ++rotations;
    key.push_back(static_cast<char>('a' + alphabet.find(ch)));
  }
  key[0] = static_cast<char>('a' + rotations);
  return key;
}

struct RawTrace {
  std::vector<std::int8_t> moves;
  Orientation final_orientation = Orientation::north;
};

inline RawTrace trace_raw(std::string_view raw, ActionModel model) {
  RawTrace t;
  Orientation o = Orientation::north;
  for (char ch : raw) {
    std::int8_t move = kStay;
    if (model == ActionModel::rotation) {
      if (ch == 'F') move = static_cast<std::int8_t>(index_of(o));
      else if (ch == 'R') o = clockwise(o);
      else if (ch == 'C') o = counterclockwise(o);
    } else if (const auto d = omni_direction(ch)) {
      move = static_cast<std::int8_t>(index_of(*d));
    }
    t.moves.push_back(move);
  }
  t.final_orientation = o;
  return t;
}

inline std::vector<Position> offsets_of(const std::vector<std::int8_t>& moves) {
  std::vector<Position> out;
  Position p{0, 0};
  for (std::int8_t m : moves) {
    if (m != kStay) {
      p.row += row_delta(orientation_from_index(m));
      p.col += col_delta(orientation_from_index(m));
    }
    out.push_back(p);
  }
  return out;
}

}  // namespace detail

inline OperationSet enumerate_operations(ActionModel model, int op_len) {
  if (op_len < 1 || op_len > kMaxOpLength)
    throw std::invalid_argument("operation length must be in 1.." + std::to_string(kMaxOpLength) + ", got " +
                                std::to_string(op_len));
  const std::string_view alphabet = action_alphabet(model);

  struct Group {
    std::string best;  // canonical representative
    std::string best_key;
    std::vector<std::int8_t> moves;
    std::map<int, std::pair<std::string, std::string>> terminals;  // orientation -> (key, raw)
  };
  std::map<std::vector<std::int8_t>, Group> groups;

  std::string raw(static_cast<std::size_t>(op_len), alphabet[0]);
  std::vector<std::size_t> digits(static_cast<std::size_t>(op_len), 0);
  while (true) {
    for (int i = 0; i < op_len; ++i) raw[i] = alphabet[digits[i]];
    const auto trace = detail::trace_raw(raw, model);
    const std::string key = detail::realization_key(raw, model);
    Group& g = groups[trace.moves];
    if (g.best.empty() || key < g.best_key) {
      g.best = raw;
      g.best_key = key;
      g.moves = trace.moves;
    }
    auto [it, inserted] = g.terminals.try_emplace(index_of(trace.final_orientation), key, raw);
    if (!inserted && key < it->second.first) it->second = {key, raw};

    int pos = op_len - 1;
    while (pos >= 0 && ++digits[pos] == alphabet.size()) digits[pos--] = 0;
    if (pos < 0) break;
  }

  std::vector<const Group*> ordered;
  for (const auto& [moves, g] : groups) ordered.push_back(&g);
  // stable indexing: lexicographic over the alphabet
  std::sort(ordered.begin(), ordered.end(), [&](const Group* a, const Group* b) {
    for (int i = 0; i < op_len; ++i) {
      const auto ra = alphabet.find(a->best[i]), rb = alphabet.find(b->best[i]);
      if (ra != rb) return ra < rb;
    }
    return false;
  });

  std::vector<Operation> ops;
  ops.reserve(ordered.size());
  for (const Group* g : ordered) {
    Operation op;
    op.actions = g->best;
    std::vector<std::pair<std::string, Terminal>> terms;
    for (const auto& [o, kr] : g->terminals) terms.push_back({kr.first, Terminal{orientation_from_index(o), kr.second}});
    std::sort(terms.begin(), terms.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (Orientation start : kOrientations) {
      const int s = index_of(start);
      const bool rotate = model == ActionModel::rotation;
      for (std::int8_t m : g->moves)
        op.moves[s].push_back(m == kStay || !rotate ? m : static_cast<std::int8_t>(index_of(rotate_by(orientation_from_index(m), start))));
      op.signature[s] = detail::offsets_of(op.moves[s]);
      for (const auto& [key, t] : terms)
        op.terminals[s].push_back({rotate ? rotate_by(t.orientation, start) : start, t.actions});
    }
    ops.push_back(std::move(op));
  }
  return OperationSet(model, op_len, std::move(ops));
}

// The restricted catalog of the adapted-PIBT baseline: FWW, RFW, CFW, RRF, WWW.
inline OperationSet pibt5_operation_set() {
  const OperationSet full = enumerate_operations(ActionModel::rotation, 3);
  std::vector<Operation> ops;
  for (std::string_view name : {"FWW", "RFW", "CFW", "RRF", "WWW"}) ops.push_back(full[static_cast<std::size_t>(*full.find(name))]);
  return OperationSet(ActionModel::rotation, 3, std::move(ops));
}

// Cells occupied at t = 0..len when executing `op` from `start`; false when
// any of them is blocked or off the grid. `out` must hold len + 1 entries.
inline bool trace_cells(const GridMap& map, const Operation& op, AgentState start, std::span<CellId> out) {
  const auto& moves = op.moves[index_of(start.orientation)];
  CellId c = start.cell;
  out[0] = c;
  for (std::size_t t = 0; t < moves.size(); ++t) {
    if (moves[t] != kStay) {
      c = map.step(c, orientation_from_index(moves[t]));
      if (c == kNoCell) return false;
    }
    out[t + 1] = c;
  }
  return true;
}

// States visited executing the canonical action string (index 0 = start), or
// nullopt when the operation leaves the passable area.
inline std::optional<std::vector<AgentState>> apply(const GridMap& map, const Operation& op, AgentState start,
                                                    ActionModel model) {
  std::vector<AgentState> path{start};
  AgentState s = start;
  for (char ch : op.actions) {
    s = apply_action(map, s, ch, model);
    if (s.cell == kNoCell) return std::nullopt;
    path.push_back(s);
  }
  return path;
}

inline ReachableStats reachable_stats(const OperationSet& set) {
  std::set<std::pair<int, int>> cells;
  std::set<std::tuple<int, int, int>> states;
  for (const Operation& op : set) {
    const Position end = op.signature[0].back();
    cells.insert({end.row, end.col});
    for (const Terminal& t : op.terminals[0]) states.insert({end.row, end.col, index_of(t.orientation)});
  }
  ReachableStats r;
  r.cells = cells.size();
  // orientation carries no information in the omnidirectional model
  r.states = set.model() == ActionModel::rotation ? states.size() : cells.size();
  r.sequences = set.size();
  return r;
}

inline ReachableStats reachable_stats(ActionModel model, int op_len) { return reachable_stats(enumerate_operations(model, op_len)); }

// One line per operation, north-facing frame:
//   <index> <actions> | (dr,dc) ... | <orientation>:<realizing actions> ...
inline std::string dump_operations(const OperationSet& set) {
  std::string out;
  for (std::size_t i = 0; i < set.size(); ++i) {
    const Operation& op = set[i];
    out += std::to_string(i) + " " + op.actions + " |";
    for (const Position& p : op.signature[0]) out += " (" + std::to_string(p.row) + "," + std::to_string(p.col) + ")";
    out += " |";
    for (const Terminal& t : op.terminals[0]) {
      out += ' ';
      out += orientation_letter(t.orientation);
      out += ":" + t.actions;
    }
    out += '\n';
  }
  return out;
}

}  // namespace epibt
