#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "dmcache/algorithm.hpp"
#include "dmcache/clock.hpp"
#include "dmcache/experts.hpp"
#include "dmcache/fc_cache.hpp"
#include "dmcache/hash_table.hpp"
#include "dmcache/local_info.hpp"
#include "dmcache/transport.hpp"

namespace dmcache {

struct ClientOptions {
  std::uint32_t sample_k = 5;
  // Size each sample READ from the observed share of live slots so that one
  // READ usually yields k live objects, and READ again (at most
  // kMaxSampleAttempts times) while fewer than k are in hand. When off, one
  // READ of exactly k slots is issued and whatever is live in it competes.
  bool sample_until_k_live = true;
  std::uint64_t fc_threshold = kDefaultFcThreshold;
  std::uint64_t fc_capacity_bytes = kDefaultFcCapacityBytes;
  // Adaptive mode keeps the eviction history and learns expert weights.
  // Otherwise the first registered expert alone picks victims.
  bool adaptive = true;
  double lambda = kDefaultLambda;
  std::uint32_t batch_size = kDefaultBatchSize;
  std::uint64_t history_len = 0;   // entries; 0 means cache_objects
  std::uint64_t cache_objects = 1; // N in the discount rate
  std::uint64_t counter_refresh_ops = kDefaultCounterRefreshOps;
  std::uint32_t max_cas_retries = 16;
  std::uint32_t max_evictions_per_alloc = 64;
  std::uint64_t seed = 1;
  std::uint64_t hash_seed = kDefaultHashSeed;
};

struct ClientStats {
  std::uint64_t gets = 0;
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;
  std::uint64_t sets = 0;
  std::uint64_t inserts = 0;
  std::uint64_t overwrites = 0;
  std::uint64_t accesses = 0;  // frequency increments issued (initial 1 included)
  std::uint64_t evictions = 0;
  std::uint64_t bucket_evictions = 0;
  std::uint64_t history_overwrites = 0;
  std::uint64_t evict_races = 0;
  std::uint64_t cas_retries = 0;
  std::uint64_t duplicates_removed = 0;
  std::uint64_t regrets = 0;
  std::uint64_t expired_matches = 0;
  std::uint64_t lost_bitmaps = 0;  // history matches whose bitmap a racing WRITE replaced
  std::uint64_t counter_refreshes = 0;
  std::uint64_t weight_flushes = 0;
  std::uint64_t fc_flushes = 0;
  std::uint64_t history_faas = 0;  // FAAs on the history counter

  ClientStats& operator+=(const ClientStats& o);
};

/// One cache client. Confined to a single thread; share the memory node, not
/// the client.
class CacheClient {
 public:
  CacheClient(Transport& transport, const PoolLayout& layout, const AlgorithmRegistry& registry, Clock& clock,
              ClientOptions options = {});

  std::optional<std::string> get(std::string_view key);
  void set(std::string_view key, std::string_view value);

  /// Records one frequency increment for `key` at `slot_addr`, issuing any
  /// FAAs the buffer releases. Returns the delta flushed for this key, if any.
  std::optional<std::uint64_t> fc_record(std::string_view key, std::uint64_t slot_addr);
  /// Applies every buffered increment. Returns the number of FAAs issued.
  std::size_t fc_flush_all();

  /// Samples and evicts one object. Returns false when the chosen victim was
  /// changed concurrently (nothing was evicted).
  bool evict_one();

  /// Pushes pending penalty sums to the controller now.
  bool flush_penalties();

  /// Feeds the local latency/cost estimator after an object fetch.
  void observe_fetch(std::uint64_t size_bytes, double latency, double cost);

  const ClientStats& stats() const { return stats_; }
  const ExpertState& experts() const { return experts_; }
  const FcCache& fc_cache() const { return fc_; }
  const LocalInfo& local_info() const { return local_info_; }
  const HashTable& table() const { return table_; }
  const AlgorithmRegistry& registry() const { return registry_; }
  const std::vector<double>& local_values() const { return local_values_; }
  const ClientOptions& options() const { return opts_; }
  Transport& transport() { return t_; }
  std::uint64_t cached_counter() const { return cached_counter_; }
  std::uint64_t history_len() const { return history_len_; }

 private:
  struct Target {
    Slot slot;
    bool virgin = false;
    bool live_victim = false;
    bool history_overwrite = false;
  };

  HistoryWindow window() const;
  MetadataView base_view(const Slot& s, std::uint64_t now) const;
  void on_hit(const Slot& slot, std::string_view key, std::span<const std::byte> ext, std::uint64_t now);
  void collect_regrets(const std::vector<Slot>& matches);
  void refresh_counter();

  std::vector<Allocation> allocate_object(std::uint64_t stream_bytes);
  std::uint64_t alloc_with_eviction(std::uint64_t bytes);
  void write_object(const std::vector<Allocation>& segs, std::span<const std::byte> stream);
  void free_allocations(const std::vector<Allocation>& segs);

  std::vector<SampledObject> sample_live();
  SampledObject sampled(const Slot& s, std::uint64_t now);
  std::optional<VictimChoice> pick(std::vector<SampledObject>& objs);
  void note_eviction(SampledObject& victim);
  std::optional<Target> overflow_target(const std::vector<Slot>& bucket, std::uint64_t now);
  // After inserting into a previously used slot: removes other live copies of
  // the key, keeping the lowest-addressed one. False when ours was removed.
  bool verify_unique(std::uint64_t bucket_index, std::string_view key, std::uint64_t our_addr,
                     std::uint64_t our_word);

  Transport& t_;
  PoolLayout layout_;
  HashTable table_;
  const AlgorithmRegistry& registry_;
  Clock& clock_;
  ClientOptions opts_;
  ExpertState experts_;
  FcCache fc_;
  LocalInfo local_info_;
  std::vector<double> local_values_;
  std::mt19937_64 rng_;
  std::uint64_t history_len_;
  std::uint32_t expert_mask_;
  std::uint64_t cached_counter_ = 0;
  std::uint64_t ops_ = 0;
  std::uint64_t last_refresh_op_ = 0;
  double live_share_ = 0.5;  // running estimate of live slots / all slots
  ClientStats stats_;
};

}  // namespace dmcache
