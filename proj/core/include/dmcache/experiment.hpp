#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "dmcache/algorithm.hpp"
#include "dmcache/audit.hpp"
#include "dmcache/cache_client.hpp"
#include "dmcache/clock.hpp"
#include "dmcache/config.hpp"
#include "dmcache/hash_table.hpp"
#include "dmcache/memory_node.hpp"
#include "dmcache/runner.hpp"
#include "dmcache/tcp_transport.hpp"

namespace dmcache {

/// Bytes charged per expert weight in the metadata account.
inline constexpr std::uint64_t kWeightBytes = 4;

/// Slots for cached objects and history entries plus the global weights.
std::uint64_t metadata_bytes(std::uint64_t cache_objects, std::uint64_t history_len, std::uint64_t experts);

/// Blocks one object of the configured key/value size occupies.
std::uint64_t object_blocks(const RunConfig& cfg, const AlgorithmRegistry& registry);

/// Power-of-two bucket count giving 1.5 slots per object or history entry.
std::uint64_t auto_bucket_count(std::uint64_t cache_objects, std::uint64_t history_len,
                                std::uint32_t slots_per_bucket);

/// Pool geometry for a config: the heap holds exactly cache_capacity_objects
/// objects of the configured size.
PoolLayout plan_pool(const RunConfig& cfg, const AlgorithmRegistry& registry);

/// A memory node (local, or reached over TCP) plus one client per
/// configured thread, wired as the config says.
class Deployment {
 public:
  explicit Deployment(const RunConfig& cfg);
  ~Deployment();
  Deployment(const Deployment&) = delete;
  Deployment& operator=(const Deployment&) = delete;

  const RunConfig& config() const { return cfg_; }
  const AlgorithmRegistry& registry() const { return registry_; }
  const PoolLayout& layout() const { return layout_; }
  MemoryNode* node() { return node_.get(); }  // null when attached to a remote server
  std::vector<CacheClient*> clients();

  /// Runs the configured workload once.
  RunMetrics run(const std::string& variant = "run");

  /// Audits the pool after run(). Needs a local node.
  AuditReport audit(bool inject_fault = false);

 private:
  RunConfig cfg_;
  AlgorithmRegistry registry_;
  PoolLayout layout_;
  std::unique_ptr<MemoryNode> node_;
  std::unique_ptr<TcpServer> server_;
  std::unique_ptr<Clock> clock_;
  std::vector<std::unique_ptr<Transport>> transports_;
  std::vector<std::unique_ptr<CacheClient>> clients_;
  VerbStats node_stats_at_end_;
};

/// Shorthand: deploy, run, return metrics.
RunMetrics run_config(const RunConfig& cfg, const std::string& variant = "run");

/// Config for a named comparison variant: "adaptive" (as configured, with
/// adaptivity on), "lru-only", "lfu-only", or any built-in algorithm name
/// followed by "-only".
RunConfig variant_config(const RunConfig& base, const std::string& variant);

/// The request sequence a single-client run replays, load pass included,
/// and the index measurement starts from.
struct ReplaySequence {
  std::vector<Request> requests;
  std::uint64_t measure_from = 0;
  std::uint64_t stream_offset = 0;  // index of the first non-load request
};
ReplaySequence replay_sequence(const RunConfig& cfg);

struct CompareRow {
  std::string variant;
  double hit_rate = 0.0;
  std::vector<PhaseHitRate> phases;
  std::uint64_t total_verbs = 0;  // 0 for oracle rows
  std::vector<double> final_weights;
};

struct Verdict {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct CompareReport {
  std::vector<CompareRow> rows;
  std::vector<Verdict> verdicts;
  const CompareRow* find(const std::string& variant) const;
  bool passed() const;
  std::string to_text() const;
  std::string to_json() const;
};

/// Runs each variant on the same request sequence. "oracle" adds exact LRU
/// and LFU rows ("oracle-lru", "oracle-lfu"). Verdicts are attached for
/// phased workloads when adaptive, lru-only and lfu-only all ran.
CompareReport run_compare(const RunConfig& cfg, const std::vector<std::string>& variants);

}  // namespace dmcache
