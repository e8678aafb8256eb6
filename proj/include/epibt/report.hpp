// Plain-text renderings of simulation results: key=value metrics, step-time
// series, and the wait heatmap as CSV and binary PGM.
#pragma once

#include <algorithm>
#include <cstdio>
#include <string>

#include "simulation.hpp"

namespace epibt {

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

inline std::string metrics_key_value(const SimMetrics& m) {
  std::string s;
  auto kv = [&](const char* k, const std::string& v) { s += std::string(k) + "=" + v + "\n"; };
  kv("goals_completed", std::to_string(m.goals_completed));
  kv("horizon", std::to_string(m.horizon));
  kv("throughput", format_double(m.throughput));
  kv("mean_step_ms", format_double(m.mean_step_ms()));
  kv("max_step_ms", format_double(m.max_step_ms()));
  kv("delay_steps", std::to_string(m.delay_steps));
  kv("failed_agent_steps", std::to_string(m.failed_agent_steps));
  kv("lns_iterations", std::to_string(m.lns_iterations));
  kv("lns_accepted", std::to_string(m.lns_accepted));
  kv("lns_monotonicity_violations", std::to_string(m.lns_monotonicity_violations));
  std::uint64_t waits = 0;
  for (auto w : m.wait_heatmap) waits += w;
  kv("total_waits", std::to_string(waits));
  return s;
}

inline std::string step_times_csv(const SimMetrics& m) {
  std::string s = "timestep,ms\n";
  for (std::size_t t = 0; t < m.step_ms.size(); ++t) s += std::to_string(t) + "," + format_double(m.step_ms[t]) + "\n";
  return s;
}

// Full width x height grid; blocked cells are written as -1.
inline std::string heatmap_csv(const SimMetrics& m, const GridMap& map) {
  std::string s;
  for (int r = 0; r < map.height(); ++r) {
    for (int c = 0; c < map.width(); ++c) {
      if (c) s += ',';
      const CellId id = map.cell_at(r, c);
      s += id == kNoCell ? "-1" : std::to_string(m.wait_heatmap[static_cast<std::size_t>(id)]);
    }
    s += '\n';
  }
  return s;
}

// 8-bit binary graymap; brighter means more waiting, blocked cells are 0 and
// free cells without waits are 32.
inline std::string heatmap_pgm(const SimMetrics& m, const GridMap& map) {
  std::uint64_t peak = 0;
  for (auto w : m.wait_heatmap) peak = std::max(peak, w);
  std::string s = "P5\n" + std::to_string(map.width()) + " " + std::to_string(map.height()) + "\n255\n";
  for (int r = 0; r < map.height(); ++r)
    for (int c = 0; c < map.width(); ++c) {
      const CellId id = map.cell_at(r, c);
      unsigned char px = 0;
      if (id != kNoCell) {
        const std::uint64_t w = m.wait_heatmap[static_cast<std::size_t>(id)];
        px = static_cast<unsigned char>(peak == 0 ? 32 : 32 + (223 * w) / peak);
      }
      s += static_cast<char>(px);
    }
  return s;
}

}  // namespace epibt
