#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

namespace crlab::replay {

// One transition of the interaction stream. `action` is the action that
// produced this observation (0 for episode-initial steps); `reward` is the
// reward received on arrival, already scaled if reward scaling is active.
// `cont` is 1 - terminal: 0 only on true termination, 1 on horizon
// truncation.
struct Step {
  Eigen::VectorXd observation;
  int action = 0;
  double reward = 0.0;
  bool is_first = false;
  bool is_last = false;
  double cont = 1.0;
};

// Fixed-length spliced segment of the stream. Episode starts inside a chunk
// are marked only by is_first flags. source_task is diagnostic; the agent
// never reads it.
struct Chunk {
  std::vector<Step> steps;
  std::int64_t chunk_id = 0;
  int source_task = -1;

  int length() const { return static_cast<int>(steps.size()); }
};

// W consecutive steps taken from a single chunk, plus provenance used by
// diagnostics and tests.
struct SampleWindow {
  std::vector<Step> steps;
  std::int64_t chunk_id = 0;
  int start = 0;
  int source_buffer = 0;  // 1 = FIFO, 2 = reservoir
};

struct SampleBatch {
  std::vector<SampleWindow> windows;

  int window_count() const { return static_cast<int>(windows.size()); }
};

}  // namespace crlab::replay
