#pragma once

#include <functional>

#include "crlab/envs/task.hpp"
#include "crlab/replay/step.hpp"
#include "crlab/rng.hpp"

namespace crlab::envs {

using Policy = std::function<int(const Eigen::VectorXd&, Rng&)>;

// Episodic interface over a TaskSpec. Deterministic: all stochasticity
// lives in the policy.
class Env {
 public:
  explicit Env(const TaskSpec& task);

  replay::Step reset();
  replay::Step step(int action);  // throws std::out_of_range on bad action

  bool episode_over() const { return done_; }
  int position() const { return position_; }
  const TaskSpec& task() const { return *task_; }

 private:
  const TaskSpec* task_;
  int position_ = 0;
  int steps_ = 0;
  bool done_ = true;
};

Policy uniform_policy();

struct ReturnStats {
  double mean = 0.0;
  double stddev = 0.0;  // population standard deviation
};

// Statistics of unscaled episodic returns under a stochastic policy.
ReturnStats rollout_return(const TaskSpec& task, const Policy& policy, Rng& rng, int episodes);

}  // namespace crlab::envs
