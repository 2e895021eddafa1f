#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <string>
#include <vector>

namespace dmcache {

enum class Op : std::uint8_t { kGet, kSet };

/// One request. Also the record type of trace files.
struct Request {
  Op op = Op::kGet;
  std::string key;
  std::uint32_t value_size = 0;  // SET only
  friend bool operator==(const Request&, const Request&) = default;
};
using TraceRecord = Request;

enum class Distribution { kZipfian, kUniform, kPhase, kTrace };

/// Alternating phases that favour recency and frequency in turn, sized
/// relative to the cache.
///
/// Recency phases draw uniformly from a window of fresh keys that slides
/// forward by one key every `drift` requests. Frequency phases repeat a
/// fixed hot set (Zipf-distributed) and are interrupted by sequential scans
/// of never-seen keys longer than the cache.
struct PhaseSpec {
  std::uint64_t lru_phase_len = 60000;
  std::uint64_t lfu_phase_len = 60000;
  std::uint32_t phases = 4;
  std::uint64_t cache_objects = 0;  // 0: the run's cache capacity
  double window_factor = 1.0;   // window keys / cache_objects
  std::uint32_t drift = 4;      // requests per window step
  double hot_factor = 0.8;      // hot keys / cache_objects
  double hot_theta = 0.5;
  double scan_factor = 0.5;     // scan length / cache_objects
  double hot_run_factor = 2.0;  // hot requests between scans / hot keys
  bool lru_first = true;
};

struct WorkloadSpec {
  Distribution distribution = Distribution::kZipfian;
  std::uint64_t num_keys = 10000;
  std::uint32_t key_bytes = 16;
  std::uint32_t value_bytes = 240;
  double get_ratio = 1.0;
  double update_ratio = 0.0;
  double insert_ratio = 0.0;
  double theta = 0.99;
  std::uint64_t ops = 100000;  // total across client threads
  std::uint64_t warmup_ops = 0;
  bool load = false;  // SET every key once before the run (not measured)
  std::uint32_t miss_penalty_us = 500;
  std::uint64_t seed = 42;
  PhaseSpec phase;
  std::string trace_path;

  void validate() const;
};

/// Fixed-width synthetic key for a key id.
std::string make_key(std::uint64_t id, std::uint32_t key_bytes);

/// Request stream of one client thread. Streams are independent and
/// reproducible: (spec, stream_index, stream_count) fixes the sequence.
std::vector<Request> generate_stream(const WorkloadSpec& spec, std::uint32_t stream_index = 0,
                                     std::uint32_t stream_count = 1);

/// The load pass for one stream (keys stream_index, stream_index + count, ...).
std::vector<Request> load_stream(const WorkloadSpec& spec, std::uint32_t stream_index = 0,
                                 std::uint32_t stream_count = 1);

/// Standard mixes: "A" 50/50 get/update, "B" 95/5, "C" read only, "D" 95/5
/// get/insert.
void apply_ycsb_mix(WorkloadSpec& spec, char mix);

/// The two-kind phase workload on its own.
std::vector<Request> phase_workload(const PhaseSpec& spec, std::uint32_t key_bytes, std::uint32_t value_bytes,
                                    std::uint64_t seed);

struct PhaseRange {
  bool lru_friendly = true;
  std::uint64_t begin = 0;
  std::uint64_t end = 0;
};
std::vector<PhaseRange> phase_ranges(const PhaseSpec& spec);

/// Trace text: `GET <key>` or `SET <key> <value_size>` per line; blank lines
/// and lines starting with '#' are skipped.
std::vector<TraceRecord> parse_trace(std::istream& in);
std::vector<TraceRecord> parse_trace(const std::filesystem::path& path);

}  // namespace dmcache
