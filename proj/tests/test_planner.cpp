#include <gtest/gtest.h>

#include <random>

#include "epibt/generators.hpp"
#include "epibt/planner.hpp"
#include "epibt/simulation.hpp"
#include "oracles.hpp"

using namespace epibt;

namespace {

struct Step {
  const GridMap* map;
  std::vector<AgentState> states;
  std::vector<DistanceMap> dmaps;
  std::vector<const DistanceMap*> ptrs;

  Step(const GridMap& m, std::vector<AgentState> s, const std::vector<CellId>& goals, ActionModel model = ActionModel::rotation)
      : map(&m), states(std::move(s)) {
    for (CellId g : goals) dmaps.push_back(build_distance_map(m, g, model));
    for (const auto& d : dmaps) ptrs.push_back(&d);
  }
};

SolverConfig config(int len = 3, TieBreak tb = TieBreak::FRW, int revisit = 10) {
  SolverConfig c;
  c.op_len = len;
  c.tiebreak = tb;
  c.revisit_limit = revisit;
  return c;
}

std::vector<std::pair<int, int>> path_points(const GridMap& m, const Planner& p, AgentId k) {
  std::vector<std::pair<int, int>> out;
  for (CellId c : p.table().path(k)) out.push_back({m.position(c).row, m.position(c).col});
  return out;
}

// Joint first actions of a step, checked by the independent log validator.
std::vector<Violation> check_first_actions(const GridMap& m, const std::vector<AgentState>& states, const StepResult& r) {
  ActionLog log;
  log.starts = states;
  std::string joint;
  for (std::size_t k = 0; k < states.size(); ++k) joint += r.first_action(static_cast<AgentId>(k));
  log.steps.push_back(joint);
  return validate_log(log, m);
}

}  // namespace

TEST(TieBreak, BetaRanksActionClasses) {
  EXPECT_EQ(tiebreak_beta("FFF", TieBreak::FRW, ActionModel::rotation), 0);
  EXPECT_EQ(tiebreak_beta("FFW", TieBreak::FRW, ActionModel::rotation), 2);
  EXPECT_EQ(tiebreak_beta("WWW", TieBreak::FRW, ActionModel::rotation), 26);
  EXPECT_EQ(tiebreak_beta("WWW", TieBreak::WRF, ActionModel::rotation), 0);
  EXPECT_EQ(tiebreak_beta("RFW", TieBreak::NONE, ActionModel::rotation), 0);
  EXPECT_EQ(tiebreak_beta("CFW", TieBreak::FRW, ActionModel::rotation), tiebreak_beta("RFW", TieBreak::FRW, ActionModel::rotation));
  EXPECT_EQ(tiebreak_beta("URW", TieBreak::FRW, ActionModel::omnidirectional), 2);
  for (TieBreak t : kTieBreaks) EXPECT_EQ(parse_tiebreak(to_string(t)), t);
}

TEST(Config, Validation) {
  SolverConfig c;
  EXPECT_NO_THROW(c.validate());
  c.mode = SolverMode::pibt5;
  c.op_len = 4;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = SolverConfig{};
  c.revisit_limit = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = SolverConfig{};
  c.alpha = 26;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = SolverConfig{};
  c.op_len = 6;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(OrderOperations, GoalThreeAheadRanksFffFirst) {
  const GridMap m = oracle::open_map(7, 7);
  const OperationSet ops = enumerate_operations(ActionModel::rotation, 3);
  const DistanceMap d = build_distance_map(m, m.cell_at(0, 3), ActionModel::rotation);
  const auto ranked = order_operations(m, ops, {m.cell_at(3, 3), Orientation::north}, d, config());
  EXPECT_EQ(ops[static_cast<std::size_t>(ranked[0].op)].actions, "FFF");
  EXPECT_EQ(ranked[0].h, 0);
  EXPECT_GT(ranked[1].h, 0);
  for (std::size_t i = 1; i < ranked.size(); ++i)
    if (ranked[i].in_bounds && ranked[i - 1].in_bounds) {
      EXPECT_LE(ranked[i - 1].weight, ranked[i].weight);
    }
}

TEST(OrderOperations, TieBreakDecidesAmongZeroCostOps) {
  // omnidirectional: from the goal, "UD" and "WW" both end on it
  const GridMap m = oracle::open_map(5, 5);
  const OperationSet ops = enumerate_operations(ActionModel::omnidirectional, 2);
  const CellId c = m.cell_at(2, 2);
  const DistanceMap d = build_distance_map(m, c, ActionModel::omnidirectional);
  SolverConfig frw_cfg = config(2), wrf_cfg = config(2, TieBreak::WRF);
  frw_cfg.model = wrf_cfg.model = ActionModel::omnidirectional;
  const auto frw = order_operations(m, ops, {c, Orientation::north}, d, frw_cfg);
  const auto wrf = order_operations(m, ops, {c, Orientation::north}, d, wrf_cfg);
  std::size_t move_first = 0, wait_first = 0, zero = 0;
  for (std::size_t i = 0; i < frw.size(); ++i)
    if (frw[i].h == 0) {
      ++zero;
      const char lead = ops[static_cast<std::size_t>(frw[i].op)].actions[0];
      if (lead != 'W' && !move_first) move_first = i + 1;
      if (lead == 'W' && !wait_first) wait_first = i + 1;
    }
  EXPECT_EQ(zero, 5u);  // WW, UD, DU, LR, RL
  ASSERT_TRUE(move_first && wait_first);
  EXPECT_LT(move_first, wait_first);
  EXPECT_EQ(ops[static_cast<std::size_t>(wrf[0].op)].actions, "WW");
}

TEST(Inherit, ShiftAndAppendWait) {
  EXPECT_EQ(shift_operation("FFW"), "FWW");
  EXPECT_EQ(shift_operation("WWW"), "WWW");
  const OperationSet ops = enumerate_operations(ActionModel::rotation, 3);
  StepResult prev;
  prev.actions = {"FFW", "WWW", "RFR"};
  const auto inh = inherit(&prev, 3, ops, config());
  EXPECT_EQ(ops[static_cast<std::size_t>(inh[0])].actions, "FWW");
  EXPECT_EQ(ops[static_cast<std::size_t>(inh[1])].actions, "WWW");
  EXPECT_EQ(ops[static_cast<std::size_t>(inh[2])].actions, "FWW");
  SolverConfig off = config();
  off.inheritance = false;
  for (int i : inherit(&prev, 3, ops, off)) EXPECT_EQ(i, ops.wait_index());
}

TEST(PlanStep, SingleAgentTakesFfw) {
  const GridMap m = oracle::open_map(5, 5);
  Step s(m, {{m.cell_at(4, 2), Orientation::north}}, {m.cell_at(2, 2)});
  Planner p(m, config());
  const auto inh = p.inherited_from(nullptr, 1);
  const StepResult r = p.plan_step(s.states, s.ptrs, inh, 0);
  EXPECT_EQ(r.actions[0], "FFW");
  EXPECT_EQ(p.operations()[static_cast<std::size_t>(r.ops[0])].actions, "FFW");
  EXPECT_EQ(p.weight(0, r.ops[0]), op_weight(0, 2, 1024));
  EXPECT_TRUE(r.success[0]);
}

TEST(SelectOperation, FreeCellNeedsNoRecursion) {
  const GridMap m = oracle::open_map(5, 5);
  Step s(m, {{m.cell_at(4, 2), Orientation::north}, {m.cell_at(0, 0), Orientation::east}}, {m.cell_at(1, 2), m.cell_at(0, 4)});
  Planner p(m, config());
  p.begin_step(s.states, s.ptrs, p.inherited_from(nullptr, 2), 0);
  p.unregister(0);
  EXPECT_TRUE(p.select_operation(0, p.rank(0)));
  EXPECT_EQ(p.select_calls(), 1u);
  EXPECT_EQ(p.operations()[static_cast<std::size_t>(p.chosen_op(0))].actions, "FFF");
}

TEST(SelectOperation, PushesLowerPriorityBlocker) {
  // agent 0 wants to go straight up the middle column; agent 1 sits in the way
  const GridMap m = oracle::open_map(3, 3);
  Step s(m, {{m.cell_at(2, 1), Orientation::north}, {m.cell_at(1, 1), Orientation::west}}, {m.cell_at(0, 1), m.cell_at(2, 2)});
  Planner p(m, config());
  p.begin_step(s.states, s.ptrs, p.inherited_from(nullptr, 2), 0);
  ASSERT_LT(p.rank(0), p.rank(1));
  p.unregister(0);
  ASSERT_TRUE(p.select_operation(0, p.rank(0)));
  EXPECT_EQ(p.table().path(0)[2], m.cell_at(0, 1));
  EXPECT_TRUE(p.table().is_registered(1));
  EXPECT_GE(p.visits(1), 1);
  EXPECT_FALSE(oracle::paths_conflict(path_points(m, p, 0), path_points(m, p, 1)));
  EXPECT_FALSE(p.hit(0));
  EXPECT_FALSE(p.hit(1));
}

TEST(SelectOperation, HigherPriorityBlockerIsNotPushed) {
  const GridMap m = oracle::open_map(3, 3);
  Step s(m, {{m.cell_at(2, 1), Orientation::north}, {m.cell_at(1, 1), Orientation::west}}, {m.cell_at(0, 1), m.cell_at(2, 2)});
  Planner p(m, config());
  p.begin_step(s.states, s.ptrs, p.inherited_from(nullptr, 2), 0);
  p.unregister(0);
  // inherited priority at or above agent 1's rank makes it unpushable
  ASSERT_TRUE(p.select_operation(0, p.rank(1)));
  EXPECT_EQ(p.visits(1), 0);
  EXPECT_EQ(p.table().path(1)[3], m.cell_at(1, 1));
  for (int t = 1; t <= 3; ++t) EXPECT_NE(p.table().path(0)[static_cast<std::size_t>(t)], m.cell_at(1, 1));
}

TEST(SelectOperation, TwoAgentCollisionIsSkipped) {
  // 1-wide corridor with agents 1 and 2 parked ahead of agent 0
  const GridMap m = oracle::open_map(4, 1);
  Step s(m, {{m.cell_at(0, 0), Orientation::east}, {m.cell_at(0, 1), Orientation::east}, {m.cell_at(0, 2), Orientation::east}},
         {m.cell_at(0, 3), m.cell_at(0, 1), m.cell_at(0, 2)});
  Planner p(m, config());
  p.begin_step(s.states, s.ptrs, p.inherited_from(nullptr, 3), 0);
  const OperationSet& ops = p.operations();
  p.unregister(0);
  // FFF and FFW run into both parked agents, FWW only into agent 1
  EXPECT_EQ(p.table().get_used(m, s.states[0], ops[static_cast<std::size_t>(*ops.find("FFF"))]).size(), 2u);
  EXPECT_EQ(p.table().get_used(m, s.states[0], ops[static_cast<std::size_t>(*ops.find("FFW"))]).size(), 2u);
  EXPECT_EQ(p.table().get_used(m, s.states[0], ops[static_cast<std::size_t>(*ops.find("FWW"))]).size(), 1u);
  ASSERT_TRUE(p.select_operation(0, -1));
  // the two-agent operations were skipped; FWW succeeded by pushing agent 1, which pushed agent 2
  EXPECT_EQ(ops[static_cast<std::size_t>(p.chosen_op(0))].actions, "FWW");
  EXPECT_EQ(p.table().path(2)[1], m.cell_at(0, 3));
  for (AgentId a = 0; a < 3; ++a)
    for (AgentId b = a + 1; b < 3; ++b) EXPECT_FALSE(oracle::paths_conflict(path_points(m, p, a), path_points(m, p, b)));
}

TEST(SelectOperation, FailureRestoresEntryState) {
  // agent 1 is registered moving into agent 0's cell at t=1; agent 0 faces
  // away from the only free cell, so every operation collides with agent 1
  const GridMap m = oracle::open_map(3, 1);
  Step s(m, {{m.cell_at(0, 1), Orientation::west}, {m.cell_at(0, 0), Orientation::east}}, {m.cell_at(0, 2), m.cell_at(0, 2)});
  Planner p(m, config());
  p.begin_step(s.states, s.ptrs, p.inherited_from(nullptr, 2), 0);
  p.unregister(1);
  p.register_op(1, *p.operations().find("FWW"));
  p.unregister(0);
  const ReservationTable before = p.table();
  const int entry = p.chosen_op(0);
  EXPECT_FALSE(p.select_operation(0, p.rank(1)));
  EXPECT_EQ(p.chosen_op(0), entry);
  EXPECT_FALSE(p.table().is_registered(0));
  EXPECT_TRUE(p.table() == before);
  EXPECT_FALSE(p.hit(0));
}

TEST(PlanStep, HeadOnCorridorWithPocket) {
  // T-map: corridor on row 1, pocket at (0,2). Agent 0 heads west through
  // (1,2) where agent 1 stands facing the pocket.
  const GridMap m = oracle::map_from_rows({"@@.@@", "....."});
  Step s(m, {{m.cell_at(1, 3), Orientation::west}, {m.cell_at(1, 2), Orientation::north}}, {m.cell_at(1, 0), m.cell_at(1, 4)});
  Planner p(m, config());
  std::vector<AgentState> states = s.states;
  std::vector<int> inh = p.inherited_from(nullptr, 2);
  bool pocket_used = false;
  for (int t = 0; t < 20; ++t) {
    const StepResult r = p.plan_step(states, s.ptrs, inh, static_cast<std::uint64_t>(t));
    ASSERT_TRUE(check_first_actions(m, states, r).empty()) << "t=" << t;
    for (std::size_t k = 0; k < 2; ++k) {
      states[k] = apply_action(m, states[k], r.actions[k][0], ActionModel::rotation);
      pocket_used |= states[k].cell == m.cell_at(0, 2);
    }
    inh = p.inherited_from(&r, 2);
    if (states[0].cell == m.cell_at(1, 0) && states[1].cell == m.cell_at(1, 4)) break;
  }
  EXPECT_TRUE(pocket_used);
  EXPECT_EQ(states[0].cell, m.cell_at(1, 0));
  EXPECT_EQ(states[1].cell, m.cell_at(1, 4));
}

TEST(PlanStep, InvariantsOnRandomInstances) {
  std::mt19937_64 rng(17);
  for (int inst = 0; inst < 40; ++inst) {
    const GridMap m = random_map(12, 12, 25, rng());
    const std::size_t n = 10 + rng() % 60;
    const Scenario sc = random_scenario(m, n, n, 1, ActionModel::rotation, rng());
    std::vector<CellId> goals;
    for (std::size_t k = 0; k < n; ++k) goals.push_back(sc.task_pool[k]);
    Step s(m, sc.agents, goals);
    const int L = inst % 3 == 0 ? 1 : 10;
    Planner p(m, config(1 + inst % 4, kTieBreaks[static_cast<std::size_t>(inst) % kTieBreaks.size()], L));
    const StepResult r = p.plan_step(s.states, s.ptrs, p.inherited_from(nullptr, n), static_cast<std::uint64_t>(inst));
    for (AgentId k = 0; k < static_cast<AgentId>(n); ++k) {
      EXPECT_FALSE(p.hit(k));
      EXPECT_LE(p.visits(k), L);
      ASSERT_TRUE(p.table().is_registered(k));
      // registered path equals the chosen operation's path
      std::vector<CellId> cells(static_cast<std::size_t>(p.operations().op_length() + 1));
      ASSERT_TRUE(trace_cells(m, p.operations()[static_cast<std::size_t>(r.ops[static_cast<std::size_t>(k)])], s.states[static_cast<std::size_t>(k)], cells));
      const auto reg = p.table().path(k);
      EXPECT_TRUE(std::equal(cells.begin(), cells.end(), reg.begin()));
    }
    for (AgentId a = 0; a < static_cast<AgentId>(n); ++a)
      for (AgentId b = a + 1; b < static_cast<AgentId>(n); ++b)
        ASSERT_FALSE(oracle::paths_conflict(path_points(m, p, a), path_points(m, p, b)));
    EXPECT_TRUE(check_first_actions(m, s.states, r).empty());
  }
}

TEST(PlanStep, TopPriorityAgentKeepsItsFirstChoice) {
  std::mt19937_64 rng(23);
  for (int inst = 0; inst < 20; ++inst) {
    const GridMap m = random_map(14, 14, 30, rng());
    const std::size_t n = 40;
    const Scenario sc = random_scenario(m, n, n, 1, ActionModel::rotation, rng());
    Step s(m, sc.agents, sc.task_pool);
    Planner p(m, config());
    const auto inh = p.inherited_from(nullptr, n);
    const StepResult r = p.plan_step(s.states, s.ptrs, inh, 0);
    const AgentId top = p.agent_order()[0];
    Planner alone(m, config());
    alone.begin_step(s.states, s.ptrs, inh, 0);
    alone.unregister(top);
    ASSERT_TRUE(alone.select_operation(top, alone.rank(top)));
    EXPECT_EQ(r.ops[static_cast<std::size_t>(top)], alone.chosen_op(top));
  }
}

TEST(PlanStep, InheritedJointOperationsStayConflictFree) {
  std::mt19937_64 rng(29);
  for (int inst = 0; inst < 30; ++inst) {
    const GridMap m = random_map(12, 12, 20, rng());
    const std::size_t n = 30;
    const Scenario sc = random_scenario(m, n, n, 1, ActionModel::rotation, rng());
    Step s(m, sc.agents, sc.task_pool);
    Planner p(m, config(2 + inst % 4));
    const StepResult r = p.plan_step(s.states, s.ptrs, p.inherited_from(nullptr, n), 0);
    std::vector<AgentState> next;
    for (std::size_t k = 0; k < n; ++k) next.push_back(apply_action(m, s.states[k], r.actions[k][0], ActionModel::rotation));
    const auto inh = p.inherited_from(&r, n);
    std::vector<std::vector<std::pair<int, int>>> paths;
    for (std::size_t k = 0; k < n; ++k) {
      const auto path = apply(m, p.operations()[static_cast<std::size_t>(inh[k])], next[k], ActionModel::rotation);
      ASSERT_TRUE(path);
      std::vector<std::pair<int, int>> pts;
      for (const AgentState& st : *path) pts.push_back({m.position(st.cell).row, m.position(st.cell).col});
      paths.push_back(pts);
    }
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = a + 1; b < n; ++b) ASSERT_FALSE(oracle::paths_conflict(paths[a], paths[b]));
  }
}

TEST(PlanStep, Pibt5BaselineUsesFiveOpsWithoutRevisits) {
  const GridMap m = random_map(12, 12, 20, 3);
  const Scenario sc = random_scenario(m, 30, 30, 1, ActionModel::rotation, 3);
  Step s(m, sc.agents, sc.task_pool);
  SolverConfig c = config();
  c.mode = SolverMode::pibt5;
  Planner p(m, c);
  EXPECT_EQ(p.operations().size(), 5u);
  EXPECT_EQ(p.config().revisit_limit, 1);
  const StepResult r = p.plan_step(s.states, s.ptrs, p.inherited_from(nullptr, 30), 0);
  for (AgentId k = 0; k < 30; ++k) EXPECT_LE(p.visits(k), 1);
  EXPECT_TRUE(check_first_actions(m, s.states, r).empty());
}

TEST(PlanStep, RndTieBreakIsSeedDeterministic) {
  const GridMap m = random_map(12, 12, 20, 4);
  const Scenario sc = random_scenario(m, 30, 30, 1, ActionModel::rotation, 4);
  Step s(m, sc.agents, sc.task_pool);
  SolverConfig c = config(3, TieBreak::RND);
  c.seed = 99;
  Planner a(m, c), b(m, c);
  const auto inh = a.inherited_from(nullptr, 30);
  EXPECT_EQ(a.plan_step(s.states, s.ptrs, inh, 5).actions, b.plan_step(s.states, s.ptrs, inh, 5).actions);
}

TEST(PlanStep, OmnidirectionalModel) {
  const GridMap m = random_map(10, 10, 15, 6);
  const Scenario sc = random_scenario(m, 25, 25, 1, ActionModel::omnidirectional, 6);
  Step s(m, sc.agents, sc.task_pool, ActionModel::omnidirectional);
  SolverConfig c = config(2);
  c.model = ActionModel::omnidirectional;
  Planner p(m, c);
  EXPECT_EQ(p.operations().size(), 25u);
  const StepResult r = p.plan_step(s.states, s.ptrs, p.inherited_from(nullptr, 25), 0);
  ActionLog log;
  log.model = ActionModel::omnidirectional;
  log.starts = s.states;
  std::string joint;
  for (const auto& a : r.actions) joint += a[0];
  log.steps.push_back(joint);
  EXPECT_TRUE(validate_log(log, m).empty());
}

TEST(PlanStep, DeadlineStopsBetweenAgents) {
  const GridMap m = random_map(12, 12, 20, 8);
  const Scenario sc = random_scenario(m, 40, 40, 1, ActionModel::rotation, 8);
  Step s(m, sc.agents, sc.task_pool);
  Planner p(m, config());
  const auto inh = p.inherited_from(nullptr, 40);
  const StepResult r = p.plan_step(s.states, s.ptrs, inh, 0, Planner::Clock::now());
  EXPECT_TRUE(r.budget_exhausted);
  EXPECT_EQ(r.ops, inh);
  EXPECT_TRUE(check_first_actions(m, s.states, r).empty());
}
