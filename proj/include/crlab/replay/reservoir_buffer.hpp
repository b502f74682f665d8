#pragma once

#include <cstdint>
#include <vector>

#include "crlab/replay/step.hpp"
#include "crlab/rng.hpp"

namespace crlab::replay {

// Long-term distribution-matching buffer: reservoir sampling over the chunk
// stream. Each offered chunk draws a key ~ U[0,1); the buffer is a
// size-limited min-heap that retains the `capacity` largest keys, so the
// retained set is a uniform random subset of everything ever offered.
// Equal keys break toward the larger chunk_id.
class ReservoirBuffer {
 public:
  struct Entry {
    double key;
    Chunk chunk;
  };

  explicit ReservoirBuffer(int capacity_chunks);

  // Draws the key from rng and offers the chunk. Returns whether the chunk
  // was retained.
  bool offer(Chunk chunk, Rng& rng);

  // Deterministic entry point with an explicit key, also used by offer().
  bool offer_with_key(Chunk chunk, double key);

  int size() const { return static_cast<int>(entries_.size()); }
  int capacity() const { return capacity_; }
  bool empty() const { return entries_.empty(); }
  std::int64_t seen() const { return seen_; }

  // Heap-array order: arbitrary but deterministic given the offer sequence.
  const Chunk& at(int i) const { return entries_.at(static_cast<std::size_t>(i)).chunk; }
  const std::vector<Entry>& entries() const { return entries_; }

  // Restores a previously serialized entry array verbatim (snapshot load).
  void restore(std::vector<Entry> entries, std::int64_t seen);

 private:
  static bool entry_less(const Entry& a, const Entry& b);

  int capacity_;
  std::int64_t seen_ = 0;
  std::vector<Entry> entries_;  // min-heap on (key, chunk_id)
};

}  // namespace crlab::replay
