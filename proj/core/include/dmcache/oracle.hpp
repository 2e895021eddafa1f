#pragma once

#include <cstdint>
#include <list>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>

#include "dmcache/workload.hpp"

namespace dmcache {

enum class OraclePolicy { kLru, kLfu, kFifo };

OraclePolicy parse_oracle_policy(std::string_view name);

/// Exact single-policy cache holding up to `capacity` keys.
///  - LRU: recency list; GET hits and SETs move to the front.
///  - LFU: minimum in-cache frequency, ties to the earliest inserted; an
///    insert starts at 1, GET hits and overwrites add 1.
///  - FIFO: insertion queue; an overwrite re-queues the key at the tail.
/// A GET miss inserts the key, as the cache would after fetching it.
class ExactCache {
 public:
  ExactCache(OraclePolicy policy, std::uint64_t capacity);

  /// Returns true for a GET hit.
  bool access(const Request& r);
  bool contains(std::string_view key) const { return index_.count(std::string(key)) != 0; }
  std::uint64_t size() const { return index_.size(); }

 private:
  struct Node {
    std::uint64_t freq = 0;
    std::uint64_t seq = 0;  // insertion order, for LFU ties
    std::list<std::string>::iterator pos;
  };
  void touch(const std::string& key, Node& n);
  void insert(const std::string& key);
  void evict();

  OraclePolicy policy_;
  std::uint64_t capacity_;
  std::uint64_t seq_ = 0;
  std::unordered_map<std::string, Node> index_;
  std::list<std::string> order_;                                  // LRU / FIFO, front = next victim
  std::map<std::pair<std::uint64_t, std::uint64_t>, std::string> by_freq_;  // LFU: (freq, seq) -> key
};

struct OracleResult {
  std::uint64_t gets = 0;
  std::uint64_t hits = 0;
  double hit_rate() const { return gets ? double(hits) / double(gets) : 0.0; }
};

/// Replays `trace` and reports the GET hit rate over requests at index
/// `measure_from` and later.
OracleResult oracle_simulate(OraclePolicy policy, std::span<const Request> trace, std::uint64_t capacity,
                             std::uint64_t measure_from = 0);

}  // namespace dmcache
