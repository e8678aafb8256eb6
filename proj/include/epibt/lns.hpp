/*
 * Anytime improvement of one planning step: repeatedly pick a random agent,
 * drop its operation, re-run operation selection with that agent above every
 * other priority, and keep the result only if the sum of operation weight
 * times goal distance strictly drops.
 */
#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <vector>

#include "planner.hpp"

namespace epibt {

struct LnsBudget {
  enum class Mode : std::uint8_t { iterations, wall_clock_ms };
  Mode mode = Mode::iterations;
  double limit = 0;

  static LnsBudget iterations(std::uint64_t n) { return {Mode::iterations, static_cast<double>(n)}; }
  static LnsBudget milliseconds(double ms) { return {Mode::wall_clock_ms, ms}; }
};

struct LnsStats {
  std::uint64_t iterations = 0;
  std::uint64_t accepted = 0;
  std::int64_t metric_before = 0;
  std::int64_t metric_after = 0;
  std::vector<std::int64_t> trace;  // metric after each accepted iteration, starting with the initial value
};

// Ticks^2: one unit of operation weight times one unit of distance is kCostScale^2.
using MetricValue = std::int64_t;

inline double metric_to_real(MetricValue m) { return static_cast<double>(m) / static_cast<double>(kCostScale * kCostScale); }

// Sum over agents of chosen-operation weight times goal distance. Agents whose
// goal is unreachable carry no meaningful weight and are left out.
inline MetricValue agent_metric(const Planner& planner, AgentId k, int op) {
  const Cost p = planner.priority(k);
  const Cost w = planner.weight(k, op);
  if (p >= kUnreachable || w >= kUnreachable) return 0;
  return w * p;
}

inline MetricValue metric(const Planner& planner) {
  MetricValue total = 0;
  for (AgentId k = 0; k < static_cast<AgentId>(planner.num_agents()); ++k) total += agent_metric(planner, k, planner.chosen_op(k));
  return total;
}

struct LnsOptions {
  bool record_trace = false;
  // Called after every accepted iteration with the planner in its new state.
  std::function<void(const Planner&)> on_accept;
};

// Improves the planner's current assignment in place (it must hold a complete,
// collision-free step, e.g. right after plan_step). Deterministic for a given
// seed in iteration mode.
inline LnsStats improve(Planner& planner, LnsBudget budget, std::uint64_t seed, const LnsOptions& options = {}) {
  if (budget.limit < 0) throw std::invalid_argument("LNS budget must be non-negative");
  LnsStats stats;
  MetricValue current = metric(planner);
  stats.metric_before = current;
  if (options.record_trace) stats.trace.push_back(current);
  const std::size_t n = planner.num_agents();
  if (n == 0) {
    stats.metric_after = current;
    return stats;
  }

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<AgentId> pick(0, static_cast<AgentId>(n - 1));
  const auto start = std::chrono::steady_clock::now();
  const auto limit_iters = static_cast<std::uint64_t>(budget.limit);
  auto exhausted = [&] {
    if (budget.mode == LnsBudget::Mode::iterations) return stats.iterations >= limit_iters;
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count() >= budget.limit;
  };

  while (!exhausted()) {
    ++stats.iterations;
    const AgentId k = pick(rng);
    planner.reset_visits();
    planner.begin_journal();
    planner.unregister(k);
    if (!planner.select_operation(k, -1)) {
      planner.rollback_journal();
      continue;
    }
    MetricValue delta = 0;
    for (const auto& e : planner.journal_entries())
      delta += agent_metric(planner, e.agent, planner.chosen_op(e.agent)) - agent_metric(planner, e.agent, e.op);
    if (delta < 0) {
      planner.commit_journal();
      current += delta;
      ++stats.accepted;
      if (options.record_trace) stats.trace.push_back(current);
      if (options.on_accept) options.on_accept(planner);
    } else {
      planner.rollback_journal();
    }
  }
  stats.metric_after = current;
  return stats;
}

}  // namespace epibt
