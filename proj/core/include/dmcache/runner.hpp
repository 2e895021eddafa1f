#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dmcache/cache_client.hpp"
#include "dmcache/config.hpp"
#include "dmcache/verb_stats.hpp"
#include "dmcache/workload.hpp"

namespace dmcache {

inline constexpr int kMetricsSchema = 1;

struct TrajectoryPoint {
  std::uint64_t op = 0;          // request index in client 0's stream
  double hit_rate = 0.0;         // cumulative over measured GETs
  double window_hit_rate = 0.0;  // since the previous point
  std::vector<double> weights;   // client 0's local expert weights
};

struct PhaseHitRate {
  bool lru_friendly = true;
  std::uint64_t begin = 0;
  std::uint64_t end = 0;
  std::uint64_t gets = 0;
  std::uint64_t hits = 0;
  double hit_rate() const { return gets ? double(hits) / double(gets) : 0.0; }
};

struct RunMetrics {
  int schema = kMetricsSchema;
  std::string variant = "run";
  double hit_rate = 0.0;
  std::uint64_t gets = 0;
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;
  std::uint64_t sets = 0;
  std::uint64_t ops_done = 0;
  double wall_seconds = 0.0;
  double ops_per_sec = 0.0;
  double penalized_seconds = 0.0;  // wall time plus miss penalties charged
  VerbStats verbs;                 // summed over client transports
  ClientStats client;              // summed over clients
  std::vector<std::string> experts;
  std::vector<double> final_weights;
  std::vector<TrajectoryPoint> trajectory;
  std::vector<PhaseHitRate> phases;  // client 0, phase workloads only
  std::uint64_t metadata_bytes = 0;
  std::uint64_t cache_capacity_objects = 0;
  std::uint64_t history_len = 0;
};

struct RunOptions {
  PenaltyMode penalty_mode = PenaltyMode::kVirtual;
  std::uint32_t miss_penalty_us = 500;
  std::uint32_t default_value_bytes = 240;
  std::uint64_t measure_from = 0;  // per stream
  std::uint64_t trajectory_every = 1000;
  std::vector<PhaseRange> phases;
};

/// Replays one stream per client, each on its own thread (inline for a
/// single client). A GET miss is charged the miss penalty and followed by a
/// SET of the object. Load streams run first, behind a barrier. Buffered
/// frequency increments and penalty sums are flushed when a stream ends.
RunMetrics run_streams(std::span<CacheClient* const> clients, const std::vector<std::vector<Request>>& loads,
                       const std::vector<std::vector<Request>>& streams, const RunOptions& opts);

/// Generates the spec's streams and replays them.
RunMetrics run_workload(const WorkloadSpec& spec, std::span<CacheClient* const> clients, RunOptions opts);

/// JSON document for the metrics; wall-clock fields are omitted when
/// `include_wall` is false so runs can be compared byte for byte.
std::string metrics_to_json(const RunMetrics& m, bool include_wall = true);
/// `op,hit_rate,window_hit_rate,w0,w1,...` with a schema comment line.
std::string trajectory_csv(const RunMetrics& m);

}  // namespace dmcache
