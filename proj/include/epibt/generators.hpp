// Seeded random maps and scenarios for tests, benchmarks and the CLI.
#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

#include "grid.hpp"
#include "scenario.hpp"

namespace epibt {

// Random width x height map with exactly `obstacles` blocked cells whose free
// cells form one connected component. Obstacles are added one at a time and a
// candidate is rejected if it would disconnect the free space.
inline GridMap random_map(int width, int height, int obstacles, std::uint64_t seed) {
  const int total = width * height;
  if (width < 1 || height < 1 || obstacles < 0 || obstacles >= total)
    throw std::invalid_argument("invalid random map dimensions or obstacle count");
  std::mt19937_64 rng(seed);
  std::vector<std::uint8_t> passable(static_cast<std::size_t>(total), 1);
  std::vector<int> order(static_cast<std::size_t>(total));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  int free_cells = total;
  std::vector<int> stack;
  std::vector<std::uint8_t> seen;
  auto connected_without = [&](int idx) {
    passable[static_cast<std::size_t>(idx)] = 0;
    int start = -1;
    for (int i = 0; i < total && start < 0; ++i)
      if (passable[static_cast<std::size_t>(i)]) start = i;
    seen.assign(static_cast<std::size_t>(total), 0);
    stack.assign(1, start);
    seen[static_cast<std::size_t>(start)] = 1;
    int reached = 1;
    while (!stack.empty()) {
      const int c = stack.back();
      stack.pop_back();
      const int r = c / width, col = c % width;
      const int nb[4][2] = {{r - 1, col}, {r + 1, col}, {r, col - 1}, {r, col + 1}};
      for (const auto& p : nb) {
        if (p[0] < 0 || p[0] >= height || p[1] < 0 || p[1] >= width) continue;
        const int j = p[0] * width + p[1];
        if (!passable[static_cast<std::size_t>(j)] || seen[static_cast<std::size_t>(j)]) continue;
        seen[static_cast<std::size_t>(j)] = 1;
        ++reached;
        stack.push_back(j);
      }
    }
    passable[static_cast<std::size_t>(idx)] = 1;
    return reached == free_cells - 1;
  };

  int placed = 0;
  for (int idx : order) {
    if (placed == obstacles) break;
    if (!connected_without(idx)) continue;
    passable[static_cast<std::size_t>(idx)] = 0;
    --free_cells;
    ++placed;
  }
  if (placed != obstacles) throw std::runtime_error("could not place all obstacles while keeping the map connected");
  return GridMap(width, height, std::move(passable));
}

// Distinct random start cells with random orientations and a random task pool,
// all drawn from the largest connected component.
inline Scenario random_scenario(const GridMap& map, std::size_t num_agents, std::size_t pool_size, int horizon,
                                ActionModel model, std::uint64_t seed) {
  int count = 0;
  const auto label = connected_components(map, &count);
  std::vector<int> sizes(static_cast<std::size_t>(count), 0);
  for (int l : label)
    if (l >= 0) ++sizes[static_cast<std::size_t>(l)];
  if (count == 0) throw std::invalid_argument("map has no passable cells");
  const int big = static_cast<int>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
  std::vector<CellId> cells;
  for (CellId c = 0; c < static_cast<CellId>(map.num_cells()); ++c)
    if (label[static_cast<std::size_t>(c)] == big) cells.push_back(c);
  if (num_agents > cells.size()) throw std::invalid_argument("more agents than cells in the largest component");
  if (pool_size == 0) throw std::invalid_argument("task pool must not be empty");

  std::mt19937_64 rng(seed);
  Scenario s;
  s.horizon = horizon;
  s.model = model;
  std::vector<CellId> shuffled = cells;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  std::uniform_int_distribution<int> ori(0, 3);
  for (std::size_t k = 0; k < num_agents; ++k)
    s.agents.push_back({shuffled[k], kOrientations[static_cast<std::size_t>(ori(rng))]});
  std::uniform_int_distribution<std::size_t> pick(0, cells.size() - 1);
  for (std::size_t j = 0; j < pool_size; ++j) s.task_pool.push_back(cells[pick(rng)]);
  return s;
}

}  // namespace epibt
