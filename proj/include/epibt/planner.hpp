/*
 * Enhanced PIBT: one planning step over multi-action operations with
 * priority inheritance, backtracking, a per-step revisit limit and operation
 * inheritance. The adapted five-operation PIBT baseline is the same planner
 * over a restricted catalog with revisit limit 1 and no inheritance.
 */
#pragma once

#include <algorithm>
#include <chrono>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "distance.hpp"
#include "grid.hpp"
#include "operations.hpp"
#include "reservation.hpp"

namespace epibt {

enum class TieBreak : std::uint8_t { FRW, FWR, RND, NONE, WRF, RWF, WFR, RFW };

inline constexpr std::array<TieBreak, 8> kTieBreaks = {TieBreak::FRW, TieBreak::FWR, TieBreak::RND, TieBreak::NONE,
                                                       TieBreak::WRF, TieBreak::RWF, TieBreak::WFR, TieBreak::RFW};

inline std::string_view to_string(TieBreak t) {
  switch (t) {
    case TieBreak::FRW: return "FRW";
    case TieBreak::FWR: return "FWR";
    case TieBreak::RND: return "RND";
    case TieBreak::NONE: return "NONE";
    case TieBreak::WRF: return "WRF";
    case TieBreak::RWF: return "RWF";
    case TieBreak::WFR: return "WFR";
    case TieBreak::RFW: return "RFW";
  }
  return "?";
}

inline std::optional<TieBreak> parse_tiebreak(std::string_view s) {
  for (TieBreak t : kTieBreaks)
    if (to_string(t) == s) return t;
  return std::nullopt;
}

enum class SolverMode : std::uint8_t { epibt, pibt5 };

inline std::string_view to_string(SolverMode m) { return m == SolverMode::epibt ? "epibt" : "pibt5"; }

inline std::optional<SolverMode> parse_solver_mode(std::string_view s) {
  if (s == "epibt") return SolverMode::epibt;
  if (s == "pibt5") return SolverMode::pibt5;
  return std::nullopt;
}

struct SolverConfig {
  int op_len = 3;
  int revisit_limit = 10;
  Cost alpha = 1024;
  TieBreak tiebreak = TieBreak::FRW;
  ActionModel model = ActionModel::rotation;
  SolverMode mode = SolverMode::epibt;
  bool inheritance = true;
  std::uint64_t seed = 0;

  // Largest tie-break value an operation of this length can get.
  Cost max_beta() const {
    Cost m = 1;
    for (int i = 0; i < op_len; ++i) m *= 3;
    return m - 1;
  }

  void validate() const {
    if (op_len < 1 || op_len > kMaxOpLength) throw std::invalid_argument("op_len must be in 1..5");
    if (revisit_limit < 1) throw std::invalid_argument("revisit limit must be >= 1");
    if (alpha <= max_beta())
      throw std::invalid_argument("alpha must exceed the tie-break spread (" + std::to_string(max_beta()) + ")");
    if (mode == SolverMode::pibt5) {
      if (model != ActionModel::rotation) throw std::invalid_argument("pibt5 baseline requires the rotation model");
      if (op_len != 3) throw std::invalid_argument("pibt5 baseline is defined for op_len 3 only");
    }
  }
};

// Tie-break value of an action string: base-3 rank of the action classes in
// order, so the first differing position decides. NONE and RND yield 0.
inline Cost tiebreak_beta(std::string_view actions, TieBreak tb, ActionModel model) {
  if (tb == TieBreak::NONE || tb == TieBreak::RND) return 0;
  const std::string_view order = to_string(tb);
  auto rank = [&](ActionClass c) -> Cost {
    const char key = c == ActionClass::move ? 'F' : (c == ActionClass::rotate ? 'R' : 'W');
    return static_cast<Cost>(order.find(key));
  };
  Cost beta = 0;
  for (char ch : actions) beta = beta * 3 + rank(action_class(ch, model));
  return beta;
}

struct RankedOp {
  int op = 0;
  Cost h = kUnreachable;  // ticks after the operation
  Cost beta = 0;
  Cost weight = kUnreachable;  // h * alpha + beta * kCostScale
  bool in_bounds = false;
};

inline Cost op_weight(Cost h, Cost beta, Cost alpha) {
  if (h >= kUnreachable) return kUnreachable;
  return h * alpha + beta * kCostScale;
}

namespace detail {

inline bool ranked_before(const RankedOp& a, const RankedOp& b) {
  if (a.in_bounds != b.in_bounds) return a.in_bounds;
  if (a.h != b.h) return a.h < b.h;
  return a.beta < b.beta;
}

}  // namespace detail

// All operations ranked ascending by weight; out-of-bounds operations are kept
// at the end. RND shuffles before the stable sort so equal-h ties are random;
// other schemes fall back to catalog order.
inline std::vector<RankedOp> order_operations(const GridMap& map, const OperationSet& ops, AgentState s,
                                              const DistanceMap& dmap, const SolverConfig& cfg,
                                              std::mt19937_64* rng = nullptr) {
  std::vector<RankedOp> out;
  out.reserve(ops.size());
  std::array<CellId, kMaxOpLength + 1> cells{};
  for (std::size_t i = 0; i < ops.size(); ++i) {
    const Operation& op = ops[i];
    RankedOp r;
    r.op = static_cast<int>(i);
    r.beta = tiebreak_beta(op.actions, cfg.tiebreak, ops.model());
    r.in_bounds = trace_cells(map, op, s, std::span<CellId>(cells.data(), op.length() + 1));
    if (r.in_bounds) r.h = h_after_end(op, s, cells[op.length()], dmap);
    r.weight = op_weight(r.h, r.beta, cfg.alpha);
    out.push_back(r);
  }
  if (cfg.tiebreak == TieBreak::RND && rng) std::shuffle(out.begin(), out.end(), *rng);
  std::stable_sort(out.begin(), out.end(), detail::ranked_before);
  return out;
}

struct StepResult {
  std::vector<int> ops;               // operation index per agent
  std::vector<std::string> actions;   // realized action string per agent
  std::vector<std::uint8_t> success;  // 0 when the agent fell back to its inherited operation
  double planning_ms = 0.0;
  std::size_t select_calls = 0;
  bool budget_exhausted = false;

  char first_action(AgentId k) const { return actions[static_cast<std::size_t>(k)][0]; }
};

// Inherited operation per agent: the realized string shifted by the executed
// first action, padded with a wait, mapped back to its catalog operation.
// All-wait when inheritance is off or there is no previous step.
inline std::vector<int> inherit(const StepResult* previous, std::size_t num_agents, const OperationSet& ops,
                                const SolverConfig& cfg) {
  const int wait = ops.wait_index();
  std::vector<int> out(num_agents, wait);
  if (!previous || !cfg.inheritance || cfg.mode == SolverMode::pibt5) return out;
  for (std::size_t k = 0; k < num_agents; ++k) {
    const std::string& a = previous->actions[k];
    const auto idx = ops.find(a.substr(1) + 'W');
    if (!idx) throw std::logic_error("shifted operation " + a.substr(1) + "W is not in the catalog");
    out[k] = *idx;
  }
  return out;
}

inline std::string shift_operation(std::string_view actions) { return std::string(actions.substr(1)) + 'W'; }

class Planner {
 public:
  using Clock = std::chrono::steady_clock;

  Planner(const GridMap& map, SolverConfig cfg) : map_(&map), cfg_(cfg) {
    if (cfg_.mode == SolverMode::pibt5) {
      cfg_.revisit_limit = 1;
      cfg_.inheritance = false;
    }
    cfg_.validate();
    ops_ = cfg_.mode == SolverMode::pibt5 ? pibt5_operation_set() : enumerate_operations(cfg_.model, cfg_.op_len);
    for (const Operation& op : ops_) beta_.push_back(tiebreak_beta(op.actions, cfg_.tiebreak, cfg_.model));
  }

  const GridMap& map() const { return *map_; }
  const SolverConfig& config() const { return cfg_; }
  const OperationSet& operations() const { return ops_; }
  std::size_t num_agents() const { return states_.size(); }
  const ReservationTable& table() const { return table_; }

  std::vector<int> inherited_from(const StepResult* previous, std::size_t num_agents) const {
    return inherit(previous, num_agents, ops_, cfg_);
  }

  // One full planning step. `deadline`, when set, stops the main loop between
  // agents; unvisited agents keep their inherited operations.
  StepResult plan_step(std::span<const AgentState> states, std::span<const DistanceMap* const> dmaps,
                       std::span<const int> inherited, std::uint64_t timestep,
                       std::optional<Clock::time_point> deadline = std::nullopt) {
    const auto t0 = Clock::now();
    begin_step(states, dmaps, inherited, timestep);
    bool exhausted = false;
    for (AgentId k : agent_order_) {
      if (deadline && Clock::now() >= *deadline) {
        exhausted = true;
        break;
      }
      if (visits(k) != 0) continue;
      unregister(k);
      if (!select_operation(k, rank_[static_cast<std::size_t>(k)])) register_op(k, inherited_[static_cast<std::size_t>(k)]);
    }
    StepResult r = result();
    r.budget_exhausted = exhausted;
    r.planning_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    return r;
  }

  // Initializes chosen operations to the inherited ones, registers their
  // paths, computes priorities and the agent order.
  void begin_step(std::span<const AgentState> states, std::span<const DistanceMap* const> dmaps,
                  std::span<const int> inherited, std::uint64_t timestep) {
    const std::size_t n = states.size();
    if (dmaps.size() != n || inherited.size() != n) throw std::invalid_argument("per-agent inputs differ in length");
    states_.assign(states.begin(), states.end());
    dmaps_.assign(dmaps.begin(), dmaps.end());
    inherited_.assign(inherited.begin(), inherited.end());
    op_ = inherited_;
    priority_.resize(n);
    visited_.assign(n, 0);
    visit_epoch_.assign(n, 0);
    epoch_ = 1;
    hit_.assign(n, 0);
    success_.assign(n, 0);
    ordered_.assign(n, 0);
    cand_begin_.assign(n, 0);
    cand_count_.assign(n, 0);
    candidates_.clear();
    cand_cells_.clear();
    journal_mark_.assign(n, 0);
    journal_epoch_ = 1;
    journal_active_ = false;
    journal_.clear();
    select_calls_ = 0;
    std::seed_seq seq{static_cast<std::uint32_t>(cfg_.seed), static_cast<std::uint32_t>(cfg_.seed >> 32),
                      static_cast<std::uint32_t>(timestep), static_cast<std::uint32_t>(timestep >> 32)};
    rng_.seed(seq);

    table_.reset(map_->num_cells(), ops_.op_length(), n);
    std::array<CellId, kMaxOpLength + 1> cells{};
    for (std::size_t k = 0; k < n; ++k) {
      const int op = inherited_[k];
      if (op < 0 || static_cast<std::size_t>(op) >= ops_.size()) throw std::invalid_argument("inherited operation out of range");
      if (!trace(static_cast<AgentId>(k), op, cells))
        throw std::invalid_argument("inherited operation of agent " + std::to_string(k) + " leaves the map");
      table_.insert_path(static_cast<AgentId>(k), std::span<const CellId>(cells.data(), ops_.op_length() + 1));
      priority_[k] = dmaps_[k] ? dmaps_[k]->cost(states_[k]) : kUnreachable;
    }
    agent_order_.resize(n);
    std::iota(agent_order_.begin(), agent_order_.end(), 0);
    std::stable_sort(agent_order_.begin(), agent_order_.end(),
                     [&](AgentId a, AgentId b) { return priority_[static_cast<std::size_t>(a)] < priority_[static_cast<std::size_t>(b)]; });
    rank_.resize(n);
    for (std::size_t i = 0; i < n; ++i) rank_[static_cast<std::size_t>(agent_order_[i])] = static_cast<Cost>(i);
  }

  // Operation selection with priority inheritance and backtracking, for agent
  // `root` whose path is not registered. Priorities are ranks in the agent
  // order (0 = highest); a blocker l can be pushed only when its rank exceeds
  // `inherited_priority`. On failure the agent's operation is
  // restored to the value it had on entry and it stays unregistered; every
  // table change made underneath is rolled back.
  bool select_operation(AgentId root, Cost inherited_priority) {
    stack_.clear();
    enter(root);
    bool result = false;
    bool returning = false;
    while (!stack_.empty()) {
      const std::size_t fi = stack_.size() - 1;
      const AgentId k = stack_[fi].agent;
      const std::size_t ks = static_cast<std::size_t>(k);
      if (returning) {
        returning = false;
        const AgentId l = stack_[fi].blocker;
        if (result) {
          hit_[ks] = 0;
          success_[ks] = 1;
          stack_.pop_back();
          returning = true;
          continue;
        }
        unregister(k);
        register_op(l, op_[static_cast<std::size_t>(l)]);
        ++stack_[fi].pos;
      }
      ensure_ordered(k);
      const std::size_t begin = cand_begin_[ks], count = cand_count_[ks];
      bool descended = false;
      for (; stack_[fi].pos < count; ++stack_[fi].pos) {
        const std::size_t ci = begin + stack_[fi].pos;
        const std::span<const CellId> cells = candidate_cells(ci);
        AgentId used[2];
        const int n_used = table_.probe(cells, used);
        if (n_used == 0) {
          set_op(k, candidates_[ci].op);
          hit_[ks] = 0;
          table_.insert_unchecked(k, cells);
          success_[ks] = 1;
          stack_.pop_back();
          result = true;
          returning = true;
          descended = true;
          break;
        }
        if (n_used > 1) continue;
        const AgentId l = used[0];
        const std::size_t ls = static_cast<std::size_t>(l);
        if (hit_[ls] || visits(l) >= cfg_.revisit_limit || rank_[ls] <= inherited_priority) continue;
        unregister(l);
        set_op(k, candidates_[ci].op);
        journal(k);
        table_.insert_unchecked(k, cells);
        stack_[fi].blocker = l;
        enter(l);
        descended = true;
        break;
      }
      if (descended) continue;
      set_op(k, stack_[fi].entry_op);
      hit_[ks] = 0;
      stack_.pop_back();
      result = false;
      returning = true;
    }
    return result;
  }

  StepResult result() const {
    StepResult r;
    const std::size_t n = states_.size();
    r.ops = op_;
    r.success = success_;
    r.actions.resize(n);
    r.select_calls = select_calls_;
    std::array<CellId, kMaxOpLength + 1> cells{};
    for (std::size_t k = 0; k < n; ++k) {
      const Operation& op = ops_[static_cast<std::size_t>(op_[k])];
      trace(static_cast<AgentId>(k), op_[k], cells);
      const auto& terms = op.terminals[index_of(states_[k].orientation)];
      r.actions[k] = dmaps_[k] ? terms[best_terminal(op, states_[k], cells[op.length()], *dmaps_[k])].actions : terms[0].actions;
    }
    return r;
  }

  // Weight in ticks of agent k executing operation `op`.
  Cost weight(AgentId k, int op) const {
    const std::size_t ks = static_cast<std::size_t>(k);
    if (!dmaps_[ks]) return kUnreachable;
    std::array<CellId, kMaxOpLength + 1> cells{};
    if (!trace(k, op, cells)) return kUnreachable;
    const Cost h = h_after_end(ops_[static_cast<std::size_t>(op)], states_[ks], cells[ops_.op_length()], *dmaps_[ks]);
    return op_weight(h, beta_[static_cast<std::size_t>(op)], cfg_.alpha);
  }

  // Distance to goal in ticks, and the unique rank derived from it.
  Cost priority(AgentId k) const { return priority_[static_cast<std::size_t>(k)]; }
  Cost rank(AgentId k) const { return rank_[static_cast<std::size_t>(k)]; }
  int chosen_op(AgentId k) const { return op_[static_cast<std::size_t>(k)]; }
  int inherited_op(AgentId k) const { return inherited_[static_cast<std::size_t>(k)]; }
  int visits(AgentId k) const {
    const std::size_t ks = static_cast<std::size_t>(k);
    return visit_epoch_[ks] == epoch_ ? visited_[ks] : 0;
  }
  bool hit(AgentId k) const { return hit_[static_cast<std::size_t>(k)] != 0; }
  std::size_t select_calls() const { return select_calls_; }
  std::span<const AgentId> agent_order() const { return agent_order_; }
  const AgentState& state(AgentId k) const { return states_[static_cast<std::size_t>(k)]; }

  // Cached ranking of agent k's in-bounds operations for this step.
  std::vector<RankedOp> ranked(AgentId k) {
    ensure_ordered(k);
    const std::size_t ks = static_cast<std::size_t>(k);
    std::vector<RankedOp> out;
    for (std::size_t i = 0; i < cand_count_[ks]; ++i) {
      const Candidate& c = candidates_[cand_begin_[ks] + i];
      out.push_back({c.op, c.h, beta_[static_cast<std::size_t>(c.op)], op_weight(c.h, beta_[static_cast<std::size_t>(c.op)], cfg_.alpha), true});
    }
    return out;
  }

  // --- used by LNS ---

  // Starts a fresh visit/hit scope: visit counts read as zero afterwards.
  void reset_visits() {
    ++epoch_;
    select_calls_ = 0;
  }

  // Records every operation or registration change from here on so that it
  // can be undone with rollback().
  void begin_journal() {
    ++journal_epoch_;
    journal_.clear();
    journal_active_ = true;
  }

  void commit_journal() {
    journal_active_ = false;
    journal_.clear();
  }

  void rollback_journal() {
    for (const JournalEntry& e : journal_) unregister_raw(e.agent);
    std::array<CellId, kMaxOpLength + 1> cells{};
    for (const JournalEntry& e : journal_) {
      const std::size_t ks = static_cast<std::size_t>(e.agent);
      op_[ks] = e.op;
      success_[ks] = e.success;
      if (e.registered) {
        trace(e.agent, e.op, cells);
        table_.insert_unchecked(e.agent, std::span<const CellId>(cells.data(), ops_.op_length() + 1));
      }
    }
    journal_active_ = false;
    journal_.clear();
  }

  struct JournalEntry {
    AgentId agent;
    int op;
    bool registered;
    std::uint8_t success;
  };
  const std::vector<JournalEntry>& journal_entries() const { return journal_; }

  void unregister(AgentId k) {
    journal(k);
    unregister_raw(k);
  }

  void register_op(AgentId k, int op) {
    journal(k);
    std::array<CellId, kMaxOpLength + 1> cells{};
    trace(k, op, cells);
    op_[static_cast<std::size_t>(k)] = op;
    table_.insert_unchecked(k, std::span<const CellId>(cells.data(), ops_.op_length() + 1));
  }

 private:
  struct Candidate {
    int op;
    Cost h;
  };
  struct Frame {
    AgentId agent;
    int entry_op;
    std::size_t pos;
    AgentId blocker;
  };

  bool trace(AgentId k, int op, std::array<CellId, kMaxOpLength + 1>& cells) const {
    const Operation& o = ops_[static_cast<std::size_t>(op)];
    return trace_cells(*map_, o, states_[static_cast<std::size_t>(k)], std::span<CellId>(cells.data(), o.length() + 1));
  }

  std::span<const CellId> candidate_cells(std::size_t ci) const {
    const std::size_t w = static_cast<std::size_t>(ops_.op_length() + 1);
    return {cand_cells_.data() + ci * w, w};
  }

  void enter(AgentId k) {
    const std::size_t ks = static_cast<std::size_t>(k);
    if (visit_epoch_[ks] != epoch_) {
      visit_epoch_[ks] = epoch_;
      visited_[ks] = 0;
    }
    ++visited_[ks];
    hit_[ks] = 1;
    ++select_calls_;
    stack_.push_back({k, op_[ks], 0, kNoAgent});
  }

  void ensure_ordered(AgentId k) {
    const std::size_t ks = static_cast<std::size_t>(k);
    if (ordered_[ks]) return;
    ordered_[ks] = 1;
    const DistanceMap* dmap = dmaps_[ks];
    const std::size_t w = static_cast<std::size_t>(ops_.op_length() + 1);
    scratch_.clear();
    std::array<CellId, kMaxOpLength + 1> cells{};
    for (std::size_t i = 0; i < ops_.size(); ++i) {
      if (!trace(k, static_cast<int>(i), cells)) continue;
      const Cost h = dmap ? h_after_end(ops_[i], states_[ks], cells[w - 1], *dmap) : kUnreachable;
      scratch_.push_back({static_cast<int>(i), h});
    }
    if (cfg_.tiebreak == TieBreak::RND) std::shuffle(scratch_.begin(), scratch_.end(), rng_);
    std::stable_sort(scratch_.begin(), scratch_.end(), [&](const Candidate& a, const Candidate& b) {
      if (a.h != b.h) return a.h < b.h;
      return beta_[static_cast<std::size_t>(a.op)] < beta_[static_cast<std::size_t>(b.op)];
    });
    cand_begin_[ks] = candidates_.size();
    cand_count_[ks] = scratch_.size();
    for (const Candidate& c : scratch_) {
      candidates_.push_back(c);
      trace(k, c.op, cells);
      cand_cells_.insert(cand_cells_.end(), cells.begin(), cells.begin() + static_cast<std::ptrdiff_t>(w));
    }
  }

  void journal(AgentId k) {
    if (!journal_active_) return;
    const std::size_t ks = static_cast<std::size_t>(k);
    if (journal_mark_[ks] == journal_epoch_) return;
    journal_mark_[ks] = journal_epoch_;
    journal_.push_back({k, op_[ks], table_.is_registered(k), success_[ks]});
  }

  void set_op(AgentId k, int op) {
    journal(k);
    op_[static_cast<std::size_t>(k)] = op;
  }

  void unregister_raw(AgentId k) { table_.remove_path(k); }

  const GridMap* map_;
  SolverConfig cfg_;
  OperationSet ops_;
  std::vector<Cost> beta_;

  std::vector<AgentState> states_;
  std::vector<const DistanceMap*> dmaps_;
  std::vector<int> inherited_;
  std::vector<int> op_;
  std::vector<Cost> priority_;
  std::vector<Cost> rank_;
  std::vector<int> visited_;
  std::vector<std::uint64_t> visit_epoch_;
  std::uint64_t epoch_ = 1;
  std::vector<std::uint8_t> hit_;
  std::vector<std::uint8_t> success_;
  std::vector<AgentId> agent_order_;
  ReservationTable table_;
  std::mt19937_64 rng_;
  std::size_t select_calls_ = 0;

  std::vector<std::uint8_t> ordered_;
  std::vector<std::size_t> cand_begin_;
  std::vector<std::size_t> cand_count_;
  std::vector<Candidate> candidates_;
  std::vector<CellId> cand_cells_;
  std::vector<Candidate> scratch_;
  std::vector<Frame> stack_;

  std::vector<std::uint64_t> journal_mark_;
  std::uint64_t journal_epoch_ = 1;
  bool journal_active_ = false;
  std::vector<JournalEntry> journal_;
};

}  // namespace epibt
