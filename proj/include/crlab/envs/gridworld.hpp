#pragma once

#include <cstdint>
#include <vector>

namespace crlab::envs {

// Actions: up, down, left, right, stay.
inline constexpr int kActionCount = 5;

// Deterministic gridworld. Moves blocked by walls or edges leave the agent
// in place. Reaching the goal terminates the episode; the horizon truncates
// it. Rewards are goal_reward on arrival at the goal, step_penalty
// otherwise.
struct GridWorld {
  int width = 8;
  int height = 8;
  std::vector<std::uint8_t> wall;  // width * height, row-major
  int start = 0;
  int goal = 0;
  double goal_reward = 1.0;
  double step_penalty = -0.01;
  int horizon = 64;

  int cell_count() const { return width * height; }
  int cell(int x, int y) const { return y * width + x; }
  int cell_x(int c) const { return c % width; }
  int cell_y(int c) const { return c / width; }
  bool is_wall(int c) const { return wall[static_cast<std::size_t>(c)] != 0; }

  // Destination of `action` from `cell`; blocked moves return `cell`.
  int next_cell(int cell, int action) const;
};

// Optimal episodic return from the start cell, by backward induction over
// the finite horizon.
double optimal_return(const GridWorld& grid);

// Breadth-first move counts from a cell; unreachable cells get -1.
std::vector<int> bfs_distances(const GridWorld& grid, int from);

bool goal_reachable(const GridWorld& grid);

}  // namespace crlab::envs
