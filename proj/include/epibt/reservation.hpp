/*
 * Space-time reservations of every agent's operation path over the planning
 * window. Vertex owners are stored in flat (time, cell) layers for t = 0..W;
 * layer 0 only serves swap detection at the first step. Swap conflicts are
 * found from consecutive vertex layers, so no edge table is kept.
 */
#pragma once

#include <algorithm>
#include <span>
#include <stdexcept>
#include <vector>

#include "grid.hpp"
#include "operations.hpp"

namespace epibt {

inline constexpr AgentId kNoAgent = -1;

class ReservationConflict : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class ReservationTable {
 public:
  ReservationTable() = default;
  ReservationTable(std::size_t num_cells, int window, std::size_t num_agents) { reset(num_cells, window, num_agents); }

  void reset(std::size_t num_cells, int window, std::size_t num_agents) {
    if (window < 1) throw std::invalid_argument("reservation window must be >= 1");
    num_cells_ = num_cells;
    window_ = window;
    owners_.assign(num_cells * static_cast<std::size_t>(window + 1), kNoAgent);
    paths_.assign(num_agents * static_cast<std::size_t>(window + 1), kNoCell);
    registered_.assign(num_agents, 0);
  }

  int window() const { return window_; }
  std::size_t num_agents() const { return registered_.size(); }
  bool is_registered(AgentId k) const { return registered_[static_cast<std::size_t>(k)] != 0; }

  AgentId owner(int t, CellId c) const { return owners_[static_cast<std::size_t>(t) * num_cells_ + static_cast<std::size_t>(c)]; }

  std::span<const CellId> path(AgentId k) const {
    return {paths_.data() + static_cast<std::size_t>(k) * (window_ + 1), static_cast<std::size_t>(window_ + 1)};
  }

  // Up to two distinct agents conflicting with `cells` (t = 0..W); returns the
  // count found, stopping early at 2.
  int probe(std::span<const CellId> cells, AgentId out[2]) const {
    int found = 0;
    auto add = [&](AgentId a) {
      if (found == 1 && out[0] == a) return false;
      out[found++] = a;
      return found == 2;
    };
    for (int t = 1; t <= window_; ++t) {
      const CellId c = cells[t];
      const AgentId v = owner(t, c);
      if (v != kNoAgent && add(v)) return 2;
      const CellId prev = cells[t - 1];
      if (prev != c) {
        const AgentId s = owner(t, prev);
        if (s != kNoAgent && owner(t - 1, c) == s && add(s)) return 2;
      }
    }
    return found;
  }

  // All registered agents whose paths conflict with `cells`: same cell at the
  // same t in 1..W, or the same edge in opposite directions at the same step.
  std::vector<AgentId> get_used(std::span<const CellId> cells) const {
    check_length(cells.size());
    std::vector<AgentId> used;
    for (int t = 1; t <= window_; ++t) {
      const CellId c = cells[t];
      const AgentId v = owner(t, c);
      if (v != kNoAgent) used.push_back(v);
      const CellId prev = cells[t - 1];
      if (prev != c) {
        const AgentId s = owner(t, prev);
        if (s != kNoAgent && owner(t - 1, c) == s) used.push_back(s);
      }
    }
    std::sort(used.begin(), used.end());
    used.erase(std::unique(used.begin(), used.end()), used.end());
    return used;
  }

  std::vector<AgentId> get_used(const GridMap& map, AgentState start, const Operation& op) const {
    std::vector<CellId> cells(op.length() + 1);
    if (!trace_cells(map, op, start, cells)) throw std::invalid_argument("operation leaves the passable area");
    return get_used(cells);
  }

  void insert_path(AgentId k, std::span<const CellId> cells) {
    check_length(cells.size());
    if (is_registered(k)) throw ReservationConflict("agent " + std::to_string(k) + " is already registered");
    if (!get_used(cells).empty())
      throw ReservationConflict("path of agent " + std::to_string(k) + " conflicts with the reservation table");
    if (owner(0, cells[0]) != kNoAgent) throw ReservationConflict("start cell of agent " + std::to_string(k) + " is taken");
    insert_unchecked(k, cells);
  }

  void insert_path(AgentId k, std::span<const AgentState> states) {
    std::vector<CellId> cells;
    for (const AgentState& s : states) cells.push_back(s.cell);
    insert_path(k, cells);
  }

  // Caller guarantees `cells` is conflict-free.
  void insert_unchecked(AgentId k, std::span<const CellId> cells) {
    CellId* dst = paths_.data() + static_cast<std::size_t>(k) * (window_ + 1);
    for (int t = 0; t <= window_; ++t) {
      dst[t] = cells[t];
      owners_[static_cast<std::size_t>(t) * num_cells_ + static_cast<std::size_t>(cells[t])] = k;
    }
    registered_[static_cast<std::size_t>(k)] = 1;
  }

  void remove_path(AgentId k) {
    if (!is_registered(k)) return;
    const CellId* src = paths_.data() + static_cast<std::size_t>(k) * (window_ + 1);
    for (int t = 0; t <= window_; ++t) {
      AgentId& o = owners_[static_cast<std::size_t>(t) * num_cells_ + static_cast<std::size_t>(src[t])];
      if (o == k) o = kNoAgent;
    }
    registered_[static_cast<std::size_t>(k)] = 0;
  }

  friend bool operator==(const ReservationTable& a, const ReservationTable& b) {
    if (a.owners_ != b.owners_ || a.registered_ != b.registered_ || a.window_ != b.window_) return false;
    for (std::size_t k = 0; k < a.registered_.size(); ++k) {
      if (!a.registered_[k]) continue;
      const auto pa = a.path(static_cast<AgentId>(k)), pb = b.path(static_cast<AgentId>(k));
      if (!std::equal(pa.begin(), pa.end(), pb.begin())) return false;
    }
    return true;
  }

 private:
  void check_length(std::size_t n) const {
    if (n != static_cast<std::size_t>(window_ + 1))
      throw std::invalid_argument("path length " + std::to_string(n) + " does not match window + 1 = " +
                                  std::to_string(window_ + 1));
  }

  std::size_t num_cells_ = 0;
  int window_ = 0;
  std::vector<AgentId> owners_;
  std::vector<CellId> paths_;
  std::vector<std::uint8_t> registered_;
};

}  // namespace epibt
