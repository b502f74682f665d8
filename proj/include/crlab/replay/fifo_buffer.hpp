#pragma once

#include <deque>
#include <optional>

#include "crlab/replay/step.hpp"

namespace crlab::replay {

// Short-term buffer: keeps the most recent `capacity` chunks in insertion
// order, evicting exactly the oldest on overflow.
class FifoBuffer {
 public:
  explicit FifoBuffer(int capacity_chunks);

  // Returns the evicted chunk, if any.
  std::optional<Chunk> insert(Chunk chunk);

  int size() const { return static_cast<int>(contents_.size()); }
  int capacity() const { return capacity_; }
  bool empty() const { return contents_.empty(); }
  const Chunk& at(int i) const { return contents_.at(static_cast<std::size_t>(i)); }

  auto begin() const { return contents_.begin(); }
  auto end() const { return contents_.end(); }

 private:
  int capacity_;
  std::deque<Chunk> contents_;
};

}  // namespace crlab::replay
