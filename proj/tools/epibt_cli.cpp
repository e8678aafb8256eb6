// Command-line front end: run simulations, analyze maps and operation sets,
// validate action logs, generate maps/scenarios/guidance weights.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "epibt/epibt.hpp"

namespace fs = std::filesystem;
using namespace epibt;

namespace {

enum Exit : int { kOk = 0, kValidation = 1, kUsage = 2, kParse = 3 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunArgs {
  std::string map, scenario, out = "out";
  std::string mode = "epibt";
  int op_len = 3;
  int revisit_limit = 10;
  std::string tiebreak = "FRW";
  long long alpha = 1024;
  bool no_inheritance = false;
  long long lns_iterations = 0;
  double lns_ms = 0;
  std::string guidance_file;
  double guidance_gamma = 0;
  std::uint64_t seed = 1;
  int horizon = 0;
  double step_budget_ms = 0;
  bool sweep = false;
  std::vector<int> sweep_op_len{1, 2, 3, 4, 5};
  std::vector<int> sweep_revisit{1, 10, 50};
  std::vector<std::string> sweep_tiebreak{"FRW", "FWR", "RND", "NONE", "WRF", "RWF", "WFR", "RFW"};
};

SolverConfig solver_config(const RunArgs& a, ActionModel model) {
  SolverConfig c;
  const auto mode = parse_solver_mode(a.mode);
  if (!mode) throw UsageError("unknown mode '" + a.mode + "'");
  const auto tb = parse_tiebreak(a.tiebreak);
  if (!tb) throw UsageError("unknown tie-break '" + a.tiebreak + "'");
  c.mode = *mode;
  c.op_len = a.op_len;
  c.revisit_limit = a.revisit_limit;
  c.tiebreak = *tb;
  c.alpha = a.alpha;
  c.inheritance = !a.no_inheritance;
  c.model = model;
  c.seed = a.seed;
  if (c.mode == SolverMode::pibt5 && c.op_len != 3) throw UsageError("pibt5 baseline supports --op-len 3 only");
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return c;
}

SimConfig sim_config(const RunArgs& a, const GridMap& map, const Scenario& sc) {
  SimConfig cfg;
  cfg.scenario = sc;
  cfg.solver = solver_config(a, sc.model);
  if (a.lns_iterations < 0 || a.lns_ms < 0) throw UsageError("LNS budget must be non-negative");
  if (a.lns_iterations > 0) cfg.lns = LnsBudget::iterations(static_cast<std::uint64_t>(a.lns_iterations));
  if (a.lns_ms > 0) cfg.lns = LnsBudget::milliseconds(a.lns_ms);
  if (a.step_budget_ms < 0) throw UsageError("--step-budget-ms must be non-negative");
  cfg.step_budget_seconds = a.step_budget_ms / 1000.0;
  if (a.horizon < 0) throw UsageError("--horizon must be >= 1");
  cfg.horizon = a.horizon;
  cfg.seed = a.seed;
  if (!a.guidance_file.empty()) {
    cfg.weights = load_edge_weights(read_text_file(a.guidance_file), map);
  } else if (a.guidance_gamma > 0) {
    cfg.weights = generate_lane_weights(map, a.guidance_gamma);
  }
  return cfg;
}

nlohmann::json metrics_json(const SimMetrics& m, const RunArgs& a) {
  nlohmann::json j;
  j["goals_completed"] = m.goals_completed;
  j["horizon"] = m.horizon;
  j["throughput"] = m.throughput;
  j["mean_step_ms"] = m.mean_step_ms();
  j["max_step_ms"] = m.max_step_ms();
  j["delay_steps"] = m.delay_steps;
  j["failed_agent_steps"] = m.failed_agent_steps;
  j["lns_iterations"] = m.lns_iterations;
  j["lns_accepted"] = m.lns_accepted;
  j["lns_monotonicity_violations"] = m.lns_monotonicity_violations;
  j["config"] = {{"mode", a.mode},         {"op_len", a.op_len}, {"revisit_limit", a.revisit_limit},
                 {"tiebreak", a.tiebreak}, {"alpha", a.alpha},   {"inheritance", !a.no_inheritance},
                 {"seed", a.seed},         {"lns_iterations", a.lns_iterations}, {"lns_ms", a.lns_ms}};
  return j;
}

int cmd_run(const RunArgs& a) {
  const GridMap map = load_map(read_text_file(a.map));
  const Scenario sc = load_scenario(read_text_file(a.scenario), map);
  fs::create_directories(a.out);

  if (a.sweep) {
    std::string csv = "op_len,revisit_limit,tiebreak,throughput,goals_completed,mean_step_ms,max_step_ms\n";
    for (int len : a.sweep_op_len)
      for (int rl : a.sweep_revisit)
        for (const std::string& tb : a.sweep_tiebreak) {
          RunArgs cell = a;
          cell.op_len = len;
          cell.revisit_limit = rl;
          cell.tiebreak = tb;
          const SimMetrics m = run(map, sim_config(cell, map, sc));
          if (!validate_log(m.log, map).empty()) {
            std::cerr << "sweep cell op_len=" << len << " L=" << rl << " tiebreak=" << tb << " produced an invalid log\n";
            return kValidation;
          }
          csv += std::to_string(len) + "," + std::to_string(rl) + "," + tb + "," + format_double(m.throughput) + "," +
                 std::to_string(m.goals_completed) + "," + format_double(m.mean_step_ms()) + "," + format_double(m.max_step_ms()) + "\n";
          std::cout << "op_len=" << len << " L=" << rl << " tiebreak=" << tb << " throughput=" << format_double(m.throughput) << "\n";
        }
    write_text_file((fs::path(a.out) / "sweep.csv").string(), csv);
    return kOk;
  }

  const SimMetrics m = run(map, sim_config(a, map, sc));
  const fs::path out(a.out);
  const std::string log_path = (out / "actions.log").string();
  write_text_file(log_path, serialize_log(m.log, map));
  write_text_file((out / "metrics.txt").string(), metrics_key_value(m));
  write_text_file((out / "metrics.json").string(), metrics_json(m, a).dump(2) + "\n");
  write_text_file((out / "step_times.csv").string(), step_times_csv(m));
  write_text_file((out / "heatmap.csv").string(), heatmap_csv(m, map));
  write_text_file((out / "heatmap.pgm").string(), heatmap_pgm(m, map));

  // Re-read what was written, so the check covers the artifact itself.
  const auto violations = validate_log(parse_log(read_text_file(log_path), map), map);
  for (const Violation& v : violations) std::cerr << describe(v) << "\n";
  std::cout << "throughput " << format_double(m.throughput) << "\n"
            << "goals_completed " << m.goals_completed << "\n"
            << "mean_step_ms " << format_double(m.mean_step_ms()) << "\n"
            << "max_step_ms " << format_double(m.max_step_ms()) << "\n";
  return violations.empty() ? kOk : kValidation;
}

int cmd_analyze(const std::string& map_path, const std::vector<std::string>& ops) {
  if (map_path.empty() == ops.empty()) throw UsageError("analyze needs exactly one of --map or --ops <model> <length>");
  if (!map_path.empty()) {
    const GridMap map = load_map(read_text_file(map_path));
    int components = 0;
    connected_components(map, &components);
    const auto bad = check_cycle_condition(map);
    std::cout << "|V| " << map.num_cells() << "\n"
              << "components " << components << "\n"
              << "cycle_condition_violations " << bad.size() << "\n";
    for (const GridEdge& e : bad) {
      const Position p = map.position(e.a), q = map.position(e.b);
      std::cout << "(" << p.row << "," << p.col << ")-(" << q.row << "," << q.col << ")\n";
    }
    return kOk;
  }
  if (ops.size() != 2) throw UsageError("--ops expects <model> <length>");
  const auto model = parse_action_model(ops[0]);
  if (!model) throw UsageError("unknown action model '" + ops[0] + "'");
  long long len = 0;
  if (!detail::parse_int(ops[1], len) || len < 1 || len > kMaxOpLength)
    throw UsageError("operation length must be 1.." + std::to_string(kMaxOpLength));
  const OperationSet set = enumerate_operations(*model, static_cast<int>(len));
  const ReachableStats st = reachable_stats(set);
  std::cout << "cells / states / sequences: " << st.cells << " / " << st.states << " / " << st.sequences << "\n"
            << dump_operations(set);
  return kOk;
}

int cmd_validate(const std::string& log_path, const std::string& map_path, const std::string& scenario_path) {
  const GridMap map = load_map(read_text_file(map_path));
  const ActionLog log = parse_log(read_text_file(log_path), map);
  if (!scenario_path.empty()) {
    const Scenario sc = load_scenario(read_text_file(scenario_path), map);
    if (sc.agents != log.starts) throw ParseError("log start states do not match the scenario", 1);
    if (sc.model != log.model) throw ParseError("log action model does not match the scenario", 1);
  }
  const auto violations = validate_log(log, map);
  for (const Violation& v : violations) std::cout << describe(v) << "\n";
  if (violations.empty()) std::cout << "ok: " << log.steps.size() << " steps, " << log.starts.size() << " agents\n";
  return violations.empty() ? kOk : kValidation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lifelong multi-agent path finding with multi-action operations"};
  app.require_subcommand(1);

  RunArgs ra;
  auto* run_cmd = app.add_subcommand("run", "Simulate a scenario and write metrics, action log and heatmap");
  run_cmd->add_option("--map", ra.map, "Map file")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--scenario", ra.scenario, "Scenario file")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--out", ra.out, "Output directory")->capture_default_str();
  run_cmd->add_option("--mode", ra.mode, "Solver: epibt or pibt5")->check(CLI::IsMember({"epibt", "pibt5"}))->capture_default_str();
  run_cmd->add_option("--op-len", ra.op_len, "Operation length")->check(CLI::Range(1, kMaxOpLength))->capture_default_str();
  run_cmd->add_option("--revisit-limit", ra.revisit_limit, "Per-step revisit limit")->check(CLI::PositiveNumber)->capture_default_str();
  run_cmd->add_option("--tiebreak", ra.tiebreak, "Tie-break order: FRW FWR RND NONE WRF RWF WFR RFW")->capture_default_str();
  run_cmd->add_option("--alpha", ra.alpha, "Weight multiplier of the distance term")->capture_default_str();
  run_cmd->add_flag("--no-inheritance", ra.no_inheritance, "Start every step from all-wait operations");
  auto* lns_it = run_cmd->add_option("--lns-iterations", ra.lns_iterations, "LNS iterations per step (0 = off)");
  auto* lns_ms = run_cmd->add_option("--lns-ms", ra.lns_ms, "LNS wall-clock budget per step in ms");
  lns_it->excludes(lns_ms);
  auto* gfile = run_cmd->add_option("--guidance-file", ra.guidance_file, "Edge weight file")->check(CLI::ExistingFile);
  auto* ggamma = run_cmd->add_option("--guidance-gamma", ra.guidance_gamma, "Generate lane guidance with this penalty");
  gfile->excludes(ggamma);
  run_cmd->add_option("--seed", ra.seed, "Random seed")->capture_default_str();
  run_cmd->add_option("--horizon", ra.horizon, "Override the scenario horizon");
  run_cmd->add_option("--step-budget-ms", ra.step_budget_ms, "Wall-clock budget per step; overruns insert wait steps (0 = off)");
  run_cmd->add_flag("--sweep", ra.sweep, "Run op-len x revisit-limit x tie-break and write sweep.csv");
  run_cmd->add_option("--sweep-op-len", ra.sweep_op_len, "Operation lengths for --sweep")->check(CLI::Range(1, kMaxOpLength));
  run_cmd->add_option("--sweep-revisit-limit", ra.sweep_revisit, "Revisit limits for --sweep")->check(CLI::PositiveNumber);
  run_cmd->add_option("--sweep-tiebreak", ra.sweep_tiebreak, "Tie-breaks for --sweep");

  std::string an_map;
  std::vector<std::string> an_ops;
  auto* analyze_cmd = app.add_subcommand("analyze", "Report map connectivity and cycle-condition edges, or operation-set statistics");
  auto* an_map_opt = analyze_cmd->add_option("--map", an_map, "Map file")->check(CLI::ExistingFile);
  auto* an_ops_opt = analyze_cmd->add_option("--ops", an_ops, "<model> <length>")->expected(2);
  an_map_opt->excludes(an_ops_opt);

  std::string v_log, v_map, v_scenario;
  auto* validate_cmd = app.add_subcommand("validate", "Check an action log for illegal moves and collisions");
  validate_cmd->add_option("--log", v_log, "Action log")->required()->check(CLI::ExistingFile);
  validate_cmd->add_option("--map", v_map, "Map file")->required()->check(CLI::ExistingFile);
  validate_cmd->add_option("--scenario", v_scenario, "Scenario whose starts must match the log")->check(CLI::ExistingFile);

  int gm_w = 32, gm_h = 32, gm_obstacles = 205;
  std::uint64_t gm_seed = 1;
  std::string gm_out;
  auto* genmap_cmd = app.add_subcommand("generate-map", "Write a random connected map");
  genmap_cmd->add_option("--width", gm_w)->check(CLI::PositiveNumber)->capture_default_str();
  genmap_cmd->add_option("--height", gm_h)->check(CLI::PositiveNumber)->capture_default_str();
  genmap_cmd->add_option("--obstacles", gm_obstacles)->check(CLI::NonNegativeNumber)->capture_default_str();
  genmap_cmd->add_option("--seed", gm_seed)->capture_default_str();
  genmap_cmd->add_option("--out", gm_out, "Output file (stdout if omitted)");

  std::string gs_map, gs_out, gs_model = "rotation";
  std::size_t gs_agents = 10, gs_tasks = 1000;
  int gs_horizon = 1000;
  std::uint64_t gs_seed = 1;
  auto* genscen_cmd = app.add_subcommand("generate-scenario", "Write a random scenario for a map");
  genscen_cmd->add_option("--map", gs_map)->required()->check(CLI::ExistingFile);
  genscen_cmd->add_option("--agents", gs_agents)->capture_default_str();
  genscen_cmd->add_option("--tasks", gs_tasks)->check(CLI::PositiveNumber)->capture_default_str();
  genscen_cmd->add_option("--horizon", gs_horizon)->check(CLI::PositiveNumber)->capture_default_str();
  genscen_cmd->add_option("--model", gs_model)->check(CLI::IsMember({"rotation", "omnidirectional", "omni"}))->capture_default_str();
  genscen_cmd->add_option("--seed", gs_seed)->capture_default_str();
  genscen_cmd->add_option("--out", gs_out, "Output file (stdout if omitted)");

  std::string gw_map, gw_out;
  double gw_gamma = kDefaultLaneGamma;
  auto* weights_cmd = app.add_subcommand("weights", "Write lane guidance edge weights for a map");
  weights_cmd->add_option("--map", gw_map)->required()->check(CLI::ExistingFile);
  weights_cmd->add_option("--gamma", gw_gamma, "Penalty for travelling against the lane")->check(CLI::PositiveNumber)->capture_default_str();
  weights_cmd->add_option("--out", gw_out, "Output file (stdout if omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  auto emit = [](const std::string& path, const std::string& text) {
    if (path.empty()) std::cout << text;
    else write_text_file(path, text);
  };

  try {
    if (*run_cmd) return cmd_run(ra);
    if (*analyze_cmd) return cmd_analyze(an_map, an_ops);
    if (*validate_cmd) return cmd_validate(v_log, v_map, v_scenario);
    if (*genmap_cmd) {
      emit(gm_out, serialize_map(random_map(gm_w, gm_h, gm_obstacles, gm_seed)));
      return kOk;
    }
    if (*genscen_cmd) {
      const GridMap map = load_map(read_text_file(gs_map));
      emit(gs_out, serialize_scenario(random_scenario(map, gs_agents, gs_tasks, gs_horizon, *parse_action_model(gs_model), gs_seed), map));
      return kOk;
    }
    if (*weights_cmd) {
      const GridMap map = load_map(read_text_file(gw_map));
      emit(gw_out, serialize_edge_weights(generate_lane_weights(map, gw_gamma), map));
      return kOk;
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kParse;
  } catch (const ScenarioError& e) {
    std::cerr << "invalid scenario: " << e.what() << "\n";
    return kParse;
  } catch (const SimulationError& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kValidation;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
