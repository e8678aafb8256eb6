/*
 * Single-goal distance maps over oriented states, optional static edge
 * weights (guidance), and the post-operation heuristic.
 *
 * Costs are fixed-point integers: one unit step (a move over a weight-1.0 edge
 * or one rotation) is kCostScale ticks. Weights are rounded to 1/kCostScale.
 * Integer costs keep weighted metrics exact under incremental updates.
 */
#pragma once

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <limits>
#include <list>
#include <memory>
#include <mutex>
#include <queue>
#include <shared_mutex>
#include <unordered_map>
#include <vector>

#include "grid.hpp"
#include "operations.hpp"

namespace epibt {

using Cost = std::int64_t;
inline constexpr Cost kCostScale = 100;
inline constexpr Cost kUnreachable = std::numeric_limits<Cost>::max() / 4;

class EdgeWeights {
 public:
  EdgeWeights() = default;
  explicit EdgeWeights(const GridMap& map) : ticks_(map.num_cells() * 4, static_cast<std::int32_t>(kCostScale)) {}

  bool empty() const { return ticks_.empty(); }
  bool is_unit() const { return unit_; }

  // Multiplier for moving out of `cell` in direction `dir`.
  double weight(CellId cell, Orientation dir) const { return static_cast<double>(ticks(cell, dir)) / kCostScale; }
  Cost ticks(CellId cell, Orientation dir) const {
    return ticks_.empty() ? kCostScale : ticks_[static_cast<std::size_t>(cell) * 4 + index_of(dir)];
  }

  void set(const GridMap& map, CellId cell, Orientation dir, double weight) {
    if (!(weight > 0.0) || !std::isfinite(weight)) throw std::invalid_argument("edge weight must be positive and finite");
    if (map.step(cell, dir) == kNoCell) throw std::invalid_argument("no grid edge in that direction");
    if (ticks_.empty()) ticks_.assign(map.num_cells() * 4, static_cast<std::int32_t>(kCostScale));
    const auto t = std::max<long long>(1, std::llround(weight * kCostScale));
    ticks_[static_cast<std::size_t>(cell) * 4 + index_of(dir)] = static_cast<std::int32_t>(t);
    if (t != kCostScale) unit_ = false;
  }

 private:
  std::vector<std::int32_t> ticks_;
  bool unit_ = true;
};

// Text format: `(<row>,<col>) <N|E|S|W> <weight>` per line; unlisted edges 1.0.
inline EdgeWeights load_edge_weights(std::string_view text, const GridMap& map) {
  EdgeWeights w(map);
  const auto lines = detail::split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const int line_no = static_cast<int>(i) + 1;
    const auto words = detail::split_words(lines[i]);
    if (words.empty() || words[0][0] == '#') continue;
    if (words.size() != 3) throw ParseError("expected '(<row>,<col>) <dir> <weight>'", line_no);
    int row = 0, col = 0;
    char tail = 0;
    if (std::sscanf(words[0].c_str(), "(%d,%d%c", &row, &col, &tail) != 3 || tail != ')')
      throw ParseError("malformed cell '" + words[0] + "'", line_no);
    const auto dir = parse_orientation(words[1]);
    if (!dir) throw ParseError("unknown direction '" + words[1] + "'", line_no);
    double value = 0.0;
    try {
      std::size_t pos = 0;
      value = std::stod(words[2], &pos);
      if (pos != words[2].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ParseError("malformed weight '" + words[2] + "'", line_no);
    }
    const CellId cell = map.cell_at(row, col);
    if (cell == kNoCell || map.step(cell, *dir) == kNoCell) throw ParseError("weight given for a non-edge", line_no);
    if (!(value > 0.0)) throw ParseError("weight must be positive", line_no);
    w.set(map, cell, *dir, value);
  }
  return w;
}

inline std::string serialize_edge_weights(const EdgeWeights& w, const GridMap& map) {
  std::string out;
  char buf[64];
  for (CellId c = 0; c < static_cast<CellId>(map.num_cells()); ++c) {
    for (Orientation o : kOrientations) {
      if (map.step(c, o) == kNoCell || w.ticks(c, o) == kCostScale) continue;
      const Position p = map.position(c);
      std::snprintf(buf, sizeof buf, "(%d,%d) %c %.2f\n", p.row, p.col, orientation_letter(o), w.weight(c, o));
      out += buf;
    }
  }
  return out;
}

inline constexpr double kDefaultLaneGamma = 1.8;

// Direction-biased lanes: on even rows westward moves cost `gamma`, on odd rows
// eastward; on even columns northward moves cost `gamma`, on odd columns
// southward. Everything else stays 1.0.
inline EdgeWeights generate_lane_weights(const GridMap& map, double gamma = kDefaultLaneGamma) {
  EdgeWeights w(map);
  for (CellId c = 0; c < static_cast<CellId>(map.num_cells()); ++c) {
    const Position p = map.position(c);
    const Orientation penalized_row = p.row % 2 == 0 ? Orientation::west : Orientation::east;
    const Orientation penalized_col = p.col % 2 == 0 ? Orientation::north : Orientation::south;
    for (Orientation o : {penalized_row, penalized_col})
      if (map.step(c, o) != kNoCell) w.set(map, c, o, gamma);
  }
  return w;
}

class DistanceMap {
 public:
  DistanceMap() = default;
  DistanceMap(CellId goal, ActionModel model, std::vector<Cost> costs)
      : goal_(goal), model_(model), costs_(std::move(costs)) {}

  CellId goal() const { return goal_; }
  ActionModel model() const { return model_; }

  // Ticks to reach the goal cell (any final orientation), or kUnreachable.
  Cost cost(CellId cell, Orientation o) const {
    return model_ == ActionModel::rotation ? costs_[static_cast<std::size_t>(cell) * 4 + index_of(o)]
                                           : costs_[static_cast<std::size_t>(cell)];
  }
  Cost cost(AgentState s) const { return cost(s.cell, s.orientation); }

  // Best cost over orientations at a cell.
  Cost cell_cost(CellId cell) const {
    if (model_ == ActionModel::omnidirectional) return costs_[static_cast<std::size_t>(cell)];
    Cost best = kUnreachable;
    for (Orientation o : kOrientations) best = std::min(best, cost(cell, o));
    return best;
  }

  // Cost in steps; infinity when unreachable.
  double distance(AgentState s) const {
    const Cost c = cost(s);
    return c >= kUnreachable ? std::numeric_limits<double>::infinity() : static_cast<double>(c) / kCostScale;
  }

 private:
  CellId goal_ = kNoCell;
  ActionModel model_ = ActionModel::rotation;
  std::vector<Cost> costs_;
};

// Exact backward shortest path from `goal`: breadth-first for unit weights,
// Dijkstra otherwise. Rotations cost one unit; moves cost the edge weight.
inline DistanceMap build_distance_map(const GridMap& map, CellId goal, ActionModel model,
                                      const EdgeWeights& weights = {}) {
  const bool rotation = model == ActionModel::rotation;
  const std::size_t states = map.num_cells() * (rotation ? 4 : 1);
  std::vector<Cost> cost(states, kUnreachable);
  auto sid = [&](CellId c, int o) { return rotation ? static_cast<std::size_t>(c) * 4 + o : static_cast<std::size_t>(c); };

  // Calls f(predecessor state, edge cost) for every state that reaches `s` in one action.
  auto for_each_predecessor = [&](std::size_t s, auto&& f) {
    if (rotation) {
      const CellId c = static_cast<CellId>(s / 4);
      const Orientation o = orientation_from_index(static_cast<int>(s % 4));
      const Orientation back = rotate_by(o, Orientation::south);
      const CellId from = map.step(c, back);
      if (from != kNoCell) f(sid(from, index_of(o)), weights.ticks(from, o));
      f(sid(c, index_of(counterclockwise(o))), kCostScale);
      f(sid(c, index_of(clockwise(o))), kCostScale);
    } else {
      const CellId c = static_cast<CellId>(s);
      for (Orientation o : kOrientations) {
        const CellId from = map.step(c, rotate_by(o, Orientation::south));
        if (from != kNoCell) f(sid(from, 0), weights.ticks(from, o));
      }
    }
  };

  if (weights.is_unit()) {
    std::vector<std::size_t> queue;
    queue.reserve(states);
    for (int o = 0; o < (rotation ? 4 : 1); ++o) {
      cost[sid(goal, o)] = 0;
      queue.push_back(sid(goal, o));
    }
    for (std::size_t qi = 0; qi < queue.size(); ++qi) {
      const std::size_t s = queue[qi];
      const Cost next = cost[s] + kCostScale;
      for_each_predecessor(s, [&](std::size_t p, Cost) {
        if (cost[p] == kUnreachable) {
          cost[p] = next;
          queue.push_back(p);
        }
      });
    }
  } else {
    using Item = std::pair<Cost, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
    for (int o = 0; o < (rotation ? 4 : 1); ++o) {
      cost[sid(goal, o)] = 0;
      open.push({0, sid(goal, o)});
    }
    while (!open.empty()) {
      const auto [c, s] = open.top();
      open.pop();
      if (c != cost[s]) continue;
      for_each_predecessor(s, [&](std::size_t p, Cost w) {
        if (c + w < cost[p]) {
          cost[p] = c + w;
          open.push({cost[p], p});
        }
      });
    }
  }
  return DistanceMap(goal, model, std::move(cost));
}

// Index of the preferred terminal state of `op` executed from `start` whose
// cells end at `end_cell`: lowest cost, ties to the earlier (cheaper) one.
inline std::size_t best_terminal(const Operation& op, AgentState start, CellId end_cell, const DistanceMap& dmap) {
  const auto& terms = op.terminals[index_of(start.orientation)];
  std::size_t best = 0;
  Cost best_cost = kUnreachable + 1;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const Cost c = dmap.cost(end_cell, terms[i].orientation);
    if (c < best_cost) {
      best_cost = c;
      best = i;
    }
  }
  return best;
}

inline Cost h_after_end(const Operation& op, AgentState start, CellId end_cell, const DistanceMap& dmap) {
  const auto& terms = op.terminals[index_of(start.orientation)];
  Cost best = kUnreachable;
  for (const Terminal& t : terms) best = std::min(best, dmap.cost(end_cell, t.orientation));
  return best;
}

// Ticks to the goal after executing `op` from `s`, taking the best heading
// among the reachable terminal states. Throws when the operation leaves the
// passable area.
inline Cost h_after(const GridMap& map, AgentState s, const Operation& op, const DistanceMap& dmap) {
  std::array<CellId, kMaxOpLength + 1> cells{};
  if (!trace_cells(map, op, s, std::span<CellId>(cells.data(), op.length() + 1)))
    throw std::invalid_argument("operation " + op.actions + " leaves the passable area");
  return h_after_end(op, s, cells[op.length()], dmap);
}

// Bounded LRU of distance maps keyed by goal cell. Lookups take a shared lock
// and builds happen outside the lock; insertions are serialized.
class DistanceCache {
 public:
  DistanceCache(const GridMap& map, ActionModel model, std::size_t capacity, EdgeWeights weights = {})
      : map_(&map), model_(model), capacity_(std::max<std::size_t>(1, capacity)), weights_(std::move(weights)) {}

  std::shared_ptr<const DistanceMap> get(CellId goal) {
    {
      std::shared_lock lock(mutex_);
      const auto it = entries_.find(goal);
      if (it != entries_.end()) {
        ++hits_;
        std::lock_guard touch(lru_mutex_);
        lru_.splice(lru_.begin(), lru_, it->second.lru_pos);
        return it->second.map;
      }
    }
    auto built = std::make_shared<const DistanceMap>(build_distance_map(*map_, goal, model_, weights_));
    std::unique_lock lock(mutex_);
    const auto it = entries_.find(goal);
    if (it != entries_.end()) return it->second.map;
    ++misses_;
    std::lock_guard touch(lru_mutex_);
    while (entries_.size() >= capacity_) {
      entries_.erase(lru_.back());
      lru_.pop_back();
    }
    lru_.push_front(goal);
    entries_.emplace(goal, Entry{built, lru_.begin()});
    return built;
  }

  std::size_t size() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
  }
  std::size_t capacity() const { return capacity_; }
  std::size_t hits() const { return hits_; }
  std::size_t misses() const { return misses_; }
  const EdgeWeights& weights() const { return weights_; }
  ActionModel model() const { return model_; }

 private:
  struct Entry {
    std::shared_ptr<const DistanceMap> map;
    std::list<CellId>::iterator lru_pos;
  };
  const GridMap* map_;
  ActionModel model_;
  std::size_t capacity_;
  EdgeWeights weights_;
  mutable std::shared_mutex mutex_;
  std::mutex lru_mutex_;
  std::unordered_map<CellId, Entry> entries_;
  std::list<CellId> lru_;
  std::atomic<std::size_t> hits_{0};
  std::atomic<std::size_t> misses_{0};
};

}  // namespace epibt
