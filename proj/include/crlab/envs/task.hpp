#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "crlab/envs/gridworld.hpp"
#include "crlab/envs/theme.hpp"

namespace crlab::envs {

struct TaskSpec {
  GridWorld grid;
  Theme theme;
  double reward_scale = 1.0;
  std::string name;
  int task_index = 0;
};

enum class ScheduleKind { Default, Reversed, TwoCycle };

const char* schedule_name(ScheduleKind kind);
ScheduleKind schedule_from_name(const std::string& name);

struct Curriculum {
  std::vector<TaskSpec> tasks;
  long long steps_per_task = 15000;
  ScheduleKind schedule = ScheduleKind::Default;

  int task_count() const { return static_cast<int>(tasks.size()); }
};

// One contiguous training window: `frames` environment steps on one task.
struct ScheduleWindow {
  int task_index;
  long long frames;
};

// Expands a schedule into its window sequence. TwoCycle visits every task
// twice in default order with half the per-task budget each time.
std::vector<ScheduleWindow> schedule_windows(ScheduleKind kind, int task_count,
                                             long long steps_per_task);

struct SuiteParams {
  int feature_dim = 64;
  int shared_grid_size = 8;
  int disjoint_grid_size = 6;
  int horizon = 64;
  double step_penalty = -0.01;
  double wall_density = 0.12;
  double delta_shared = 0.5;
  double delta_disjoint = 1.0;
  double base_goal_reward = 1.0;
};

// One fixed grid observed through six themes: a base plus five cumulative
// perturbations. All tasks share dynamics and a reward scale of 1.
Curriculum make_shared_suite(std::uint64_t seed, const SuiteParams& params = {});

// Six independently sampled grids with independent themes. Reward scales
// span three orders of magnitude and are applied inversely to the raw
// rewards, so scaled rewards stay comparable.
Curriculum make_disjoint_suite(std::uint64_t seed, const SuiteParams& params = {});

Curriculum make_suite(const std::string& suite, std::uint64_t seed,
                      const SuiteParams& params = {});

// JSON description sufficient to reconstruct the suite exactly.
nlohmann::json describe_suite(const std::string& suite, std::uint64_t seed,
                              const SuiteParams& params = {});

// Regenerates the suite named by a description and verifies it matches.
Curriculum suite_from_description(const nlohmann::json& description);

SuiteParams suite_params_from_json(const nlohmann::json& j);
nlohmann::json suite_params_to_json(const SuiteParams& params);

}  // namespace crlab::envs
