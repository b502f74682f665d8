#include "crlab/replay/augmented_buffer.hpp"
#include "crlab/replay/fifo_buffer.hpp"
#include "crlab/replay/reservoir_buffer.hpp"
#include "crlab/replay/splicer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <utility>

#include <nlohmann/json.hpp>

#include "crlab/errors.hpp"

namespace crlab::replay {

// ---------------------------------------------------------------- splicer

RolloutSplicer::RolloutSplicer(int chunk_length, int feature_dim)
    : chunk_length_(chunk_length), feature_dim_(feature_dim) {
  if (chunk_length_ < 1) throw std::invalid_argument("splicer: chunk length must be >= 1");
  if (feature_dim_ < 1) throw std::invalid_argument("splicer: feature dim must be >= 1");
  pending_.reserve(static_cast<std::size_t>(chunk_length_));
}

std::optional<Chunk> RolloutSplicer::push(Step step, int source_task) {
  if (step.observation.size() != feature_dim_)
    throw std::invalid_argument("splicer: observation dimension mismatch");
  if (!step.observation.allFinite())
    throw std::invalid_argument("splicer: non-finite observation");
  if (!std::isfinite(step.reward))
    throw std::invalid_argument("splicer: non-finite reward");

  pending_.push_back(std::move(step));
  ++steps_seen_;
  if (pending_size() < chunk_length_) return std::nullopt;

  Chunk chunk;
  chunk.steps = std::move(pending_);
  chunk.chunk_id = next_chunk_id_++;
  chunk.source_task = source_task;
  pending_.clear();
  pending_.reserve(static_cast<std::size_t>(chunk_length_));
  return chunk;
}

// ------------------------------------------------------------------- fifo

FifoBuffer::FifoBuffer(int capacity_chunks) : capacity_(capacity_chunks) {
  if (capacity_ < 0) throw std::invalid_argument("fifo: negative capacity");
}

std::optional<Chunk> FifoBuffer::insert(Chunk chunk) {
  if (capacity_ == 0) return chunk;  // degenerate: nothing is ever stored
  contents_.push_back(std::move(chunk));
  if (size() <= capacity_) return std::nullopt;
  Chunk evicted = std::move(contents_.front());
  contents_.pop_front();
  return evicted;
}

// -------------------------------------------------------------- reservoir

ReservoirBuffer::ReservoirBuffer(int capacity_chunks) : capacity_(capacity_chunks) {
  if (capacity_ < 0) throw std::invalid_argument("reservoir: negative capacity");
  entries_.reserve(static_cast<std::size_t>(capacity_));
}

bool ReservoirBuffer::entry_less(const Entry& a, const Entry& b) {
  if (a.key != b.key) return a.key < b.key;
  return a.chunk.chunk_id < b.chunk.chunk_id;  // equal keys: larger id wins
}

bool ReservoirBuffer::offer(Chunk chunk, Rng& rng) {
  return offer_with_key(std::move(chunk), rng.uniform01());
}

bool ReservoirBuffer::offer_with_key(Chunk chunk, double key) {
  ++seen_;
  if (capacity_ == 0) return false;

  Entry entry{key, std::move(chunk)};
  auto greater = [](const Entry& a, const Entry& b) { return entry_less(b, a); };

  if (size() < capacity_) {
    entries_.push_back(std::move(entry));
    std::push_heap(entries_.begin(), entries_.end(), greater);
    return true;
  }
  // Full: the new entry survives only if it beats the current minimum.
  if (!entry_less(entries_.front(), entry)) return false;
  std::pop_heap(entries_.begin(), entries_.end(), greater);
  entries_.back() = std::move(entry);
  std::push_heap(entries_.begin(), entries_.end(), greater);
  return true;
}

void ReservoirBuffer::restore(std::vector<Entry> entries, std::int64_t seen) {
  if (static_cast<int>(entries.size()) > capacity_)
    throw std::invalid_argument("reservoir: restored entries exceed capacity");
  // Kept verbatim: the serialized array is already a heap, and element order
  // must survive a round trip for sampling to replay identically.
  auto greater = [](const Entry& a, const Entry& b) { return entry_less(b, a); };
  if (!std::is_heap(entries.begin(), entries.end(), greater))
    throw std::invalid_argument("reservoir: restored entries are not in heap order");
  entries_ = std::move(entries);
  seen_ = seen;
}

// -------------------------------------------------------------- augmented

long long capacity_observations(const ReplayConfig& cfg) {
  return (static_cast<long long>(cfg.fifo_capacity) + cfg.reservoir_capacity) * cfg.chunk_length;
}

AugmentedBuffer::AugmentedBuffer(ReplayConfig cfg)
    : config_(cfg), fifo_(cfg.fifo_capacity), reservoir_(cfg.reservoir_capacity) {
  if (cfg.chunk_length < 1) throw std::invalid_argument("replay: chunk length must be >= 1");
  if (cfg.window_length < 1 || cfg.window_length > cfg.chunk_length)
    throw std::invalid_argument("replay: window length must be in [1, chunk length]");
}

void AugmentedBuffer::add(Chunk chunk, Rng& rng) {
  if (chunk.length() != config_.chunk_length)
    throw std::invalid_argument("replay: chunk length mismatch on insert");
  Chunk copy = chunk;
  fifo_.insert(std::move(copy));
  reservoir_.offer(std::move(chunk), rng);
}

SampleBatch AugmentedBuffer::sample(Rng& rng) const {
  return sample(rng, config_.batch_windows, config_.window_length);
}

SampleBatch AugmentedBuffer::sample(Rng& rng, int window_count, int window_length) const {
  if (window_length > config_.chunk_length)
    throw std::invalid_argument("replay: window longer than chunk");
  if (fifo_.empty() && reservoir_.empty())
    throw BufferEmptyError("replay: both buffers empty");

  int choice = static_cast<int>(rng.uniform_below(2)) + 1;  // 1 = FIFO, 2 = reservoir
  if (choice == 1 && fifo_.empty()) choice = 2;
  if (choice == 2 && reservoir_.empty()) choice = 1;

  const int pool_size = choice == 1 ? fifo_.size() : reservoir_.size();
  const int max_start = config_.chunk_length - window_length;

  SampleBatch batch;
  batch.windows.reserve(static_cast<std::size_t>(window_count));
  for (int w = 0; w < window_count; ++w) {
    const int idx = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(pool_size)));
    const Chunk& chunk = choice == 1 ? fifo_.at(idx) : reservoir_.at(idx);
    const int start =
        max_start == 0 ? 0 : static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(max_start) + 1));

    SampleWindow window;
    window.chunk_id = chunk.chunk_id;
    window.start = start;
    window.source_buffer = choice;
    window.steps.assign(chunk.steps.begin() + start, chunk.steps.begin() + start + window_length);
    batch.windows.push_back(std::move(window));
  }
  return batch;
}

AugmentedBuffer AugmentedBuffer::restore(ReplayConfig cfg, FifoBuffer fifo, ReservoirBuffer reservoir) {
  AugmentedBuffer buf(cfg);
  buf.fifo_ = std::move(fifo);
  buf.reservoir_ = std::move(reservoir);
  return buf;
}

std::map<int, int> buffer_composition(const FifoBuffer& buf) {
  std::map<int, int> hist;
  for (const Chunk& c : buf) ++hist[c.source_task];
  return hist;
}

std::map<int, int> buffer_composition(const ReservoirBuffer& buf) {
  std::map<int, int> hist;
  for (const auto& e : buf.entries()) ++hist[e.chunk.source_task];
  return hist;
}

// --------------------------------------------------------------- snapshot

namespace {

nlohmann::json step_to_json(const Step& s) {
  nlohmann::json j;
  j["o"] = std::vector<double>(s.observation.data(), s.observation.data() + s.observation.size());
  j["a"] = s.action;
  j["r"] = s.reward;
  j["f"] = s.is_first;
  j["l"] = s.is_last;
  j["c"] = s.cont;
  return j;
}

Step step_from_json(const nlohmann::json& j) {
  Step s;
  const auto obs = j.at("o").get<std::vector<double>>();
  s.observation = Eigen::Map<const Eigen::VectorXd>(obs.data(), static_cast<Eigen::Index>(obs.size()));
  s.action = j.at("a").get<int>();
  s.reward = j.at("r").get<double>();
  s.is_first = j.at("f").get<bool>();
  s.is_last = j.at("l").get<bool>();
  s.cont = j.at("c").get<double>();
  return s;
}

nlohmann::json chunk_to_json(const Chunk& c) {
  nlohmann::json j;
  j["chunk_id"] = c.chunk_id;
  j["source_task"] = c.source_task;
  nlohmann::json steps = nlohmann::json::array();
  for (const Step& s : c.steps) steps.push_back(step_to_json(s));
  j["steps"] = std::move(steps);
  return j;
}

Chunk chunk_from_json(const nlohmann::json& j) {
  Chunk c;
  c.chunk_id = j.at("chunk_id").get<std::int64_t>();
  c.source_task = j.at("source_task").get<int>();
  for (const auto& sj : j.at("steps")) c.steps.push_back(step_from_json(sj));
  return c;
}

}  // namespace

nlohmann::json snapshot_to_json(const AugmentedBuffer& buf) {
  const ReplayConfig& cfg = buf.config();
  nlohmann::json j;
  j["schema_version"] = 1;
  j["config"] = {{"chunk_length", cfg.chunk_length},
                 {"fifo_capacity", cfg.fifo_capacity},
                 {"reservoir_capacity", cfg.reservoir_capacity},
                 {"batch_windows", cfg.batch_windows},
                 {"window_length", cfg.window_length},
                 {"feature_dim", cfg.feature_dim},
                 {"action_count", cfg.action_count}};

  nlohmann::json fifo = nlohmann::json::array();
  for (const Chunk& c : buf.fifo()) fifo.push_back(chunk_to_json(c));
  j["fifo"] = std::move(fifo);

  // Entries serialized in heap-array order so a reload reproduces the exact
  // sampling sequence under the same RNG state.
  nlohmann::json reservoir = nlohmann::json::array();
  for (const auto& e : buf.reservoir().entries()) {
    nlohmann::json ej;
    ej["key"] = e.key;
    ej["chunk"] = chunk_to_json(e.chunk);
    reservoir.push_back(std::move(ej));
  }
  j["reservoir"] = std::move(reservoir);
  j["reservoir_seen"] = buf.reservoir().seen();
  return j;
}

AugmentedBuffer snapshot_from_json(const nlohmann::json& j) {
  if (j.value("schema_version", 0) != 1)
    throw IoError("buffer snapshot: unsupported schema_version");
  const auto& cj = j.at("config");
  ReplayConfig cfg;
  cfg.chunk_length = cj.at("chunk_length").get<int>();
  cfg.fifo_capacity = cj.at("fifo_capacity").get<int>();
  cfg.reservoir_capacity = cj.at("reservoir_capacity").get<int>();
  cfg.batch_windows = cj.at("batch_windows").get<int>();
  cfg.window_length = cj.at("window_length").get<int>();
  cfg.feature_dim = cj.at("feature_dim").get<int>();
  cfg.action_count = cj.at("action_count").get<int>();

  FifoBuffer fifo(cfg.fifo_capacity);
  for (const auto& chj : j.at("fifo")) fifo.insert(chunk_from_json(chj));

  ReservoirBuffer reservoir(cfg.reservoir_capacity);
  std::vector<ReservoirBuffer::Entry> entries;
  for (const auto& ej : j.at("reservoir"))
    entries.push_back({ej.at("key").get<double>(), chunk_from_json(ej.at("chunk"))});
  reservoir.restore(std::move(entries), j.at("reservoir_seen").get<std::int64_t>());

  return AugmentedBuffer::restore(cfg, std::move(fifo), std::move(reservoir));
}

void save_snapshot(const AugmentedBuffer& buf, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open snapshot file for writing: " + path.string());
  out << snapshot_to_json(buf).dump() << '\n';
  if (!out) throw IoError("failed writing snapshot: " + path.string());
}

AugmentedBuffer load_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open snapshot file: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("snapshot parse error in " + path.string() + ": " + e.what());
  }
  return snapshot_from_json(j);
}

}  // namespace crlab::replay
