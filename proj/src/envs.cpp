#include "crlab/envs/env.hpp"
#include "crlab/envs/gridworld.hpp"
#include "crlab/envs/task.hpp"
#include "crlab/envs/theme.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "crlab/errors.hpp"

namespace crlab::envs {

// -------------------------------------------------------------- gridworld

int GridWorld::next_cell(int cell, int action) const {
  int x = cell_x(cell), y = cell_y(cell);
  switch (action) {
    case 0: y -= 1; break;  // up
    case 1: y += 1; break;  // down
    case 2: x -= 1; break;  // left
    case 3: x += 1; break;  // right
    case 4: break;          // stay
    default: throw std::out_of_range("gridworld: action out of range");
  }
  if (x < 0 || x >= width || y < 0 || y >= height) return cell;
  const int dest = this->cell(x, y);
  if (is_wall(dest)) return cell;
  return dest;
}

std::vector<int> bfs_distances(const GridWorld& grid, int from) {
  std::vector<int> dist(static_cast<std::size_t>(grid.cell_count()), -1);
  std::deque<int> queue;
  dist[static_cast<std::size_t>(from)] = 0;
  queue.push_back(from);
  while (!queue.empty()) {
    const int c = queue.front();
    queue.pop_front();
    for (int a = 0; a < 4; ++a) {
      const int n = grid.next_cell(c, a);
      if (dist[static_cast<std::size_t>(n)] < 0) {
        dist[static_cast<std::size_t>(n)] = dist[static_cast<std::size_t>(c)] + 1;
        queue.push_back(n);
      }
    }
  }
  return dist;
}

bool goal_reachable(const GridWorld& grid) {
  return bfs_distances(grid, grid.start)[static_cast<std::size_t>(grid.goal)] >= 0;
}

double optimal_return(const GridWorld& grid) {
  const int n = grid.cell_count();
  // Backward induction: value[c] is the best return achievable from c with
  // t steps remaining; the goal is absorbing.
  std::vector<double> value(static_cast<std::size_t>(n), 0.0);
  std::vector<double> next(static_cast<std::size_t>(n), 0.0);
  for (int t = 0; t < grid.horizon; ++t) {
    for (int c = 0; c < n; ++c) {
      if (c == grid.goal || grid.is_wall(c)) {
        next[static_cast<std::size_t>(c)] = 0.0;
        continue;
      }
      double best = -std::numeric_limits<double>::infinity();
      for (int a = 0; a < kActionCount; ++a) {
        const int dest = grid.next_cell(c, a);
        const double reward = dest == grid.goal ? grid.goal_reward : grid.step_penalty;
        const double future = dest == grid.goal ? 0.0 : value[static_cast<std::size_t>(dest)];
        best = std::max(best, reward + future);
      }
      next[static_cast<std::size_t>(c)] = best;
    }
    std::swap(value, next);
  }
  return value[static_cast<std::size_t>(grid.start)];
}

// ------------------------------------------------------------------ theme

double theme_distance(const Theme& a, const Theme& b) {
  if (a.projection.rows() != b.projection.rows() || a.projection.cols() != b.projection.cols())
    throw std::invalid_argument("theme_distance: shape mismatch");
  return (a.projection - b.projection).norm() / std::sqrt(static_cast<double>(a.projection.cols()));
}

namespace {

void normalize_columns(Eigen::MatrixXd& m, const Eigen::MatrixXd& fallback) {
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    const double norm = m.col(c).norm();
    if (norm < 1e-9) {
      m.col(c) = fallback.col(c);
    } else {
      m.col(c) /= norm;
    }
  }
}

Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = rng.normal();
  return m;
}

}  // namespace

Theme make_base_theme(int feature_dim, int cell_count, std::uint64_t seed) {
  Rng rng(seed);
  Theme theme;
  theme.projection = gaussian_matrix(feature_dim, cell_count, rng);
  normalize_columns(theme.projection, theme.projection);
  theme.variant_id = "base";
  return theme;
}

const char* variant_name(ThemeVariant variant) {
  switch (variant) {
    case ThemeVariant::NoBackground: return "no_background";
    case ThemeVariant::RestrictedBasis: return "restricted_basis";
    case ThemeVariant::RegeneratedRows: return "regenerated_rows";
    case ThemeVariant::RankCollapsed: return "rank_collapsed";
    case ThemeVariant::Recentered: return "recentered";
  }
  return "unknown";
}

Theme apply_variant(const Theme& prev, const Theme& base, ThemeVariant variant,
                    const GridWorld& grid, double max_distance, std::uint64_t seed) {
  Rng rng(seed);
  const Eigen::Index d = prev.projection.rows();
  const Eigen::Index s = prev.projection.cols();

  Eigen::MatrixXd candidate = prev.projection;
  switch (variant) {
    case ThemeVariant::NoBackground:
      candidate.topRows(d / 4).setZero();
      break;
    case ThemeVariant::RestrictedBasis: {
      const Eigen::Index rank = (3 * d) / 4;
      const Eigen::MatrixXd source = gaussian_matrix(d, rank, rng);
      const Eigen::MatrixXd q =
          Eigen::HouseholderQR<Eigen::MatrixXd>(source).householderQ() * Eigen::MatrixXd::Identity(d, rank);
      candidate = q * (q.transpose() * candidate);
      break;
    }
    case ThemeVariant::RegeneratedRows:
      candidate.middleRows(d / 4, d / 4) = gaussian_matrix(d / 4, s, rng);
      break;
    case ThemeVariant::RankCollapsed: {
      Eigen::VectorXd direction = candidate.rowwise().mean();
      if (direction.norm() < 1e-9) direction = candidate.col(0);
      direction.normalize();
      candidate = direction * (direction.transpose() * candidate);
      break;
    }
    case ThemeVariant::Recentered: {
      // Feature of cell c becomes the feature of c shifted so that the goal
      // sits at the grid center, with toroidal wrap.
      const int cx = grid.width / 2, cy = grid.height / 2;
      const int sx = cx - grid.cell_x(grid.goal), sy = cy - grid.cell_y(grid.goal);
      Eigen::MatrixXd shifted(d, s);
      for (int c = 0; c < static_cast<int>(s); ++c) {
        const int x = ((grid.cell_x(c) - sx) % grid.width + grid.width) % grid.width;
        const int y = ((grid.cell_y(c) - sy) % grid.height + grid.height) % grid.height;
        shifted.col(c) = prev.projection.col(grid.cell(x, y));
      }
      candidate = shifted;
      break;
    }
  }
  normalize_columns(candidate, prev.projection);

  Theme result;
  result.variant_id = variant_name(variant);

  // Blend toward the candidate, backing off until the result stays within
  // the distance budget of both the previous variant and the base theme.
  double beta = 0.5;
  const double budget = 0.9 * max_distance;
  for (int attempt = 0; attempt < 48; ++attempt) {
    Eigen::MatrixXd blended = (1.0 - beta) * prev.projection + beta * candidate;
    normalize_columns(blended, prev.projection);
    result.projection = std::move(blended);
    const double to_prev = theme_distance(result, prev);
    const double to_base = theme_distance(result, base);
    if (to_prev > 1e-9 && to_prev <= budget && to_base <= budget) return result;
    beta *= 0.5;
  }
  throw std::logic_error("apply_variant: could not place variant within distance budget");
}

// ------------------------------------------------------------------ suite

const char* schedule_name(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::Default: return "default";
    case ScheduleKind::Reversed: return "reversed";
    case ScheduleKind::TwoCycle: return "two_cycle";
  }
  return "unknown";
}

ScheduleKind schedule_from_name(const std::string& name) {
  if (name == "default") return ScheduleKind::Default;
  if (name == "reversed") return ScheduleKind::Reversed;
  if (name == "two_cycle") return ScheduleKind::TwoCycle;
  throw ConfigError("unknown schedule: " + name);
}

std::vector<ScheduleWindow> schedule_windows(ScheduleKind kind, int task_count,
                                             long long steps_per_task) {
  std::vector<ScheduleWindow> windows;
  switch (kind) {
    case ScheduleKind::Default:
      for (int i = 0; i < task_count; ++i) windows.push_back({i, steps_per_task});
      break;
    case ScheduleKind::Reversed:
      for (int i = task_count - 1; i >= 0; --i) windows.push_back({i, steps_per_task});
      break;
    case ScheduleKind::TwoCycle: {
      if (steps_per_task % 2 != 0)
        throw ConfigError("two_cycle schedule requires an even per-task budget");
      const long long half = steps_per_task / 2;
      for (int cycle = 0; cycle < 2; ++cycle)
        for (int i = 0; i < task_count; ++i) windows.push_back({i, half});
      break;
    }
  }
  return windows;
}

namespace {

GridWorld generate_grid(std::uint64_t seed, int size, double wall_density, int horizon,
                        double goal_reward, double step_penalty) {
  const int min_goal_dist = size - 2;
  for (std::uint64_t attempt = 0; attempt < 1000; ++attempt) {
    Rng rng(hash_mix(seed, attempt));
    GridWorld grid;
    grid.width = grid.height = size;
    grid.horizon = horizon;
    grid.goal_reward = goal_reward;
    grid.step_penalty = step_penalty;
    grid.wall.assign(static_cast<std::size_t>(grid.cell_count()), 0);
    for (auto& w : grid.wall) w = rng.uniform01() < wall_density ? 1 : 0;

    std::vector<int> open;
    for (int c = 0; c < grid.cell_count(); ++c)
      if (!grid.is_wall(c)) open.push_back(c);
    if (open.size() < 2) continue;

    grid.start = open[rng.uniform_below(open.size())];
    grid.goal = open[rng.uniform_below(open.size())];
    if (grid.start == grid.goal) continue;

    const auto dist = bfs_distances(grid, grid.start);
    const int d = dist[static_cast<std::size_t>(grid.goal)];
    if (d < min_goal_dist) continue;
    return grid;
  }
  throw std::logic_error("generate_grid: no valid grid found");
}

bool same_grid(const GridWorld& a, const GridWorld& b) {
  return a.wall == b.wall && a.start == b.start && a.goal == b.goal;
}

}  // namespace

Curriculum make_shared_suite(std::uint64_t seed, const SuiteParams& params) {
  const std::uint64_t grid_seed = hash_mix(seed, stream_tag("shared_grid"));
  const GridWorld grid = generate_grid(grid_seed, params.shared_grid_size, params.wall_density,
                                       params.horizon, params.base_goal_reward, params.step_penalty);

  Curriculum curriculum;
  const std::uint64_t base_seed = hash_mix(seed, stream_tag("shared_theme_base"));
  Theme base = make_base_theme(params.feature_dim, grid.cell_count(), base_seed);
  curriculum.tasks.push_back({grid, base, 1.0, "shared/base", 0});

  const ThemeVariant variants[] = {ThemeVariant::NoBackground, ThemeVariant::RestrictedBasis,
                                   ThemeVariant::RegeneratedRows, ThemeVariant::RankCollapsed,
                                   ThemeVariant::Recentered};
  Theme prev = base;
  int index = 1;
  for (ThemeVariant v : variants) {
    const std::uint64_t vseed =
        hash_mix(seed, stream_tag("shared_variant") + static_cast<std::uint64_t>(index));
    Theme theme = apply_variant(prev, base, v, grid, params.delta_shared, vseed);
    curriculum.tasks.push_back({grid, theme, 1.0, std::string("shared/") + theme.variant_id, index});
    prev = std::move(theme);
    ++index;
  }
  return curriculum;
}

Curriculum make_disjoint_suite(std::uint64_t seed, const SuiteParams& params) {
  // Raw goal rewards are the inverse of the per-task scales: scaled rewards
  // stay comparable while raw rewards span three orders of magnitude.
  const double scales[] = {0.05, 1.0, 0.001, 0.2, 0.5, 0.5};
  const char* names[] = {"world_a", "world_b", "world_c", "world_d", "world_e", "world_f"};

  Curriculum curriculum;
  for (int i = 0; i < 6; ++i) {
    const double scale = scales[i];
    GridWorld grid;
    Theme theme;
    bool placed = false;
    for (std::uint64_t attempt = 0; attempt < 1000 && !placed; ++attempt) {
      const std::uint64_t gseed =
          hash_mix(seed, hash_mix(stream_tag("disjoint_grid") + static_cast<std::uint64_t>(i), attempt));
      grid = generate_grid(gseed, params.disjoint_grid_size, params.wall_density, params.horizon,
                           params.base_goal_reward / scale, params.step_penalty / scale);
      const std::uint64_t tseed =
          hash_mix(seed, hash_mix(stream_tag("disjoint_theme") + static_cast<std::uint64_t>(i), attempt));
      theme = make_base_theme(params.feature_dim, grid.cell_count(), tseed);

      placed = true;
      for (const TaskSpec& other : curriculum.tasks) {
        if (same_grid(grid, other.grid) || theme_distance(theme, other.theme) < params.delta_disjoint) {
          placed = false;
          break;
        }
      }
    }
    if (!placed) throw std::logic_error("make_disjoint_suite: could not place task");
    curriculum.tasks.push_back({std::move(grid), std::move(theme), scale, names[i], i});
  }
  return curriculum;
}

Curriculum make_suite(const std::string& suite, std::uint64_t seed, const SuiteParams& params) {
  if (suite == "shared") return make_shared_suite(seed, params);
  if (suite == "disjoint") return make_disjoint_suite(seed, params);
  throw ConfigError("unknown suite: " + suite);
}

// ------------------------------------------------------------ description

nlohmann::json suite_params_to_json(const SuiteParams& p) {
  return {{"feature_dim", p.feature_dim},
          {"shared_grid_size", p.shared_grid_size},
          {"disjoint_grid_size", p.disjoint_grid_size},
          {"horizon", p.horizon},
          {"step_penalty", p.step_penalty},
          {"wall_density", p.wall_density},
          {"delta_shared", p.delta_shared},
          {"delta_disjoint", p.delta_disjoint},
          {"base_goal_reward", p.base_goal_reward}};
}

SuiteParams suite_params_from_json(const nlohmann::json& j) {
  SuiteParams p;
  p.feature_dim = j.value("feature_dim", p.feature_dim);
  p.shared_grid_size = j.value("shared_grid_size", p.shared_grid_size);
  p.disjoint_grid_size = j.value("disjoint_grid_size", p.disjoint_grid_size);
  p.horizon = j.value("horizon", p.horizon);
  p.step_penalty = j.value("step_penalty", p.step_penalty);
  p.wall_density = j.value("wall_density", p.wall_density);
  p.delta_shared = j.value("delta_shared", p.delta_shared);
  p.delta_disjoint = j.value("delta_disjoint", p.delta_disjoint);
  p.base_goal_reward = j.value("base_goal_reward", p.base_goal_reward);
  return p;
}

namespace {

nlohmann::json grid_to_json(const GridWorld& g) {
  std::vector<int> walls;
  for (int c = 0; c < g.cell_count(); ++c)
    if (g.is_wall(c)) walls.push_back(c);
  return {{"width", g.width},
          {"height", g.height},
          {"walls", walls},
          {"start", g.start},
          {"goal", g.goal},
          {"goal_reward", g.goal_reward},
          {"step_penalty", g.step_penalty},
          {"horizon", g.horizon}};
}

}  // namespace

nlohmann::json describe_suite(const std::string& suite, std::uint64_t seed, const SuiteParams& params) {
  const Curriculum curriculum = make_suite(suite, seed, params);
  nlohmann::json tasks = nlohmann::json::array();
  for (const TaskSpec& t : curriculum.tasks) {
    tasks.push_back({{"name", t.name},
                     {"task_index", t.task_index},
                     {"variant", t.theme.variant_id},
                     {"reward_scale", t.reward_scale},
                     {"grid", grid_to_json(t.grid)}});
  }
  return {{"schema_version", 1},
          {"suite", suite},
          {"seed", seed},
          {"params", suite_params_to_json(params)},
          {"tasks", tasks}};
}

Curriculum suite_from_description(const nlohmann::json& description) {
  if (description.value("schema_version", 0) != 1)
    throw IoError("suite description: unsupported schema_version");
  const std::string suite = description.at("suite").get<std::string>();
  const auto seed = description.at("seed").get<std::uint64_t>();
  const SuiteParams params = suite_params_from_json(description.at("params"));
  Curriculum curriculum = make_suite(suite, seed, params);

  const nlohmann::json expected = describe_suite(suite, seed, params);
  if (expected.at("tasks") != description.at("tasks"))
    throw IoError("suite description does not match the regenerated suite");
  return curriculum;
}

// -------------------------------------------------------------------- env

Env::Env(const TaskSpec& task) : task_(&task) {}

replay::Step Env::reset() {
  position_ = task_->grid.start;
  steps_ = 0;
  done_ = false;
  replay::Step s;
  s.observation = task_->theme.projection.col(position_);
  s.action = 0;
  s.reward = 0.0;
  s.is_first = true;
  s.is_last = false;
  s.cont = 1.0;
  return s;
}

replay::Step Env::step(int action) {
  if (done_) throw std::logic_error("env: step after episode end");
  if (action < 0 || action >= kActionCount) throw std::out_of_range("env: action out of range");

  position_ = task_->grid.next_cell(position_, action);
  ++steps_;

  replay::Step s;
  s.observation = task_->theme.projection.col(position_);
  s.action = action;
  s.is_first = false;
  if (position_ == task_->grid.goal) {
    s.reward = task_->grid.goal_reward;
    s.is_last = true;
    s.cont = 0.0;  // true termination
    done_ = true;
  } else {
    s.reward = task_->grid.step_penalty;
    s.cont = 1.0;
    s.is_last = steps_ >= task_->grid.horizon;  // truncation keeps cont = 1
    if (s.is_last) done_ = true;
  }
  return s;
}

Policy uniform_policy() {
  return [](const Eigen::VectorXd&, Rng& rng) {
    return static_cast<int>(rng.uniform_below(kActionCount));
  };
}

ReturnStats rollout_return(const TaskSpec& task, const Policy& policy, Rng& rng, int episodes) {
  if (episodes < 1) throw std::invalid_argument("rollout_return: episodes must be >= 1");
  Env env(task);
  std::vector<double> returns;
  returns.reserve(static_cast<std::size_t>(episodes));
  for (int e = 0; e < episodes; ++e) {
    replay::Step s = env.reset();
    double total = 0.0;
    while (!env.episode_over()) {
      const int action = policy(s.observation, rng);
      s = env.step(action);
      total += s.reward;
    }
    returns.push_back(total);
  }
  double mean = 0.0;
  for (double r : returns) mean += r;
  mean /= episodes;
  double var = 0.0;
  for (double r : returns) var += (r - mean) * (r - mean);
  var /= episodes;
  return {mean, std::sqrt(var)};
}

}  // namespace crlab::envs
