#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "crlab/replay/step.hpp"

namespace crlab::replay {

// Splices the per-step stream into chunks of fixed length, carrying partial
// segments across episode boundaries. Chunk ids increase in creation order.
class RolloutSplicer {
 public:
  RolloutSplicer(int chunk_length, int feature_dim);

  // Appends the next stream step. Emits a chunk exactly when the pending
  // segment reaches the chunk length. Throws std::invalid_argument on
  // non-finite observations/rewards or a dimension mismatch.
  std::optional<Chunk> push(Step step, int source_task);

  int chunk_length() const { return chunk_length_; }
  int feature_dim() const { return feature_dim_; }
  int pending_size() const { return static_cast<int>(pending_.size()); }
  const std::vector<Step>& pending() const { return pending_; }
  std::int64_t chunks_emitted() const { return next_chunk_id_; }
  std::int64_t steps_seen() const { return steps_seen_; }

 private:
  int chunk_length_;
  int feature_dim_;
  std::vector<Step> pending_;
  std::int64_t next_chunk_id_ = 0;
  std::int64_t steps_seen_ = 0;
};

}  // namespace crlab::replay
