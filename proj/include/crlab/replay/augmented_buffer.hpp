#pragma once

#include <cstdint>
#include <filesystem>
#include <map>

#include <nlohmann/json_fwd.hpp>

#include "crlab/replay/fifo_buffer.hpp"
#include "crlab/replay/reservoir_buffer.hpp"
#include "crlab/replay/step.hpp"
#include "crlab/rng.hpp"

namespace crlab::replay {

struct ReplayConfig {
  int chunk_length = 64;       // L
  int fifo_capacity = 64;      // C1
  int reservoir_capacity = 64; // C2
  int batch_windows = 8;       // B
  int window_length = 16;      // W
  int feature_dim = 64;        // d
  int action_count = 5;        // A
};

// Total observation capacity (C1 + C2) * L.
long long capacity_observations(const ReplayConfig& cfg);

// FIFO + reservoir pair. Every chunk is inserted into the FIFO and offered
// to the reservoir exactly once, at creation time.
class AugmentedBuffer {
 public:
  explicit AugmentedBuffer(ReplayConfig cfg);

  void add(Chunk chunk, Rng& rng);

  // One buffer chosen uniformly per batch; B chunks uniform with
  // replacement from it; start offsets uniform on [0, L - W]. Falls back to
  // the non-empty buffer when the chosen one is empty; throws
  // BufferEmptyError when both are. Draw order is fixed: buffer choice,
  // then per window (chunk index, offset).
  SampleBatch sample(Rng& rng, int window_count, int window_length) const;
  SampleBatch sample(Rng& rng) const;

  const FifoBuffer& fifo() const { return fifo_; }
  const ReservoirBuffer& reservoir() const { return reservoir_; }
  const ReplayConfig& config() const { return config_; }
  int total_chunks() const { return fifo_.size() + reservoir_.size(); }

  static AugmentedBuffer restore(ReplayConfig cfg, FifoBuffer fifo, ReservoirBuffer reservoir);

 private:
  ReplayConfig config_;
  FifoBuffer fifo_;
  ReservoirBuffer reservoir_;
};

// Chunk counts per source_task; counts sum to the buffer size.
std::map<int, int> buffer_composition(const FifoBuffer& buf);
std::map<int, int> buffer_composition(const ReservoirBuffer& buf);

// Snapshot container: config, FIFO chunk records in order, reservoir
// entries with keys. Round-trip load reproduces identical sampling
// behavior under the same RNG state.
nlohmann::json snapshot_to_json(const AugmentedBuffer& buf);
AugmentedBuffer snapshot_from_json(const nlohmann::json& j);
void save_snapshot(const AugmentedBuffer& buf, const std::filesystem::path& path);
AugmentedBuffer load_snapshot(const std::filesystem::path& path);

}  // namespace crlab::replay
