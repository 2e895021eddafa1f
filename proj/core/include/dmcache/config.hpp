#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <string>
#include <vector>

#include "dmcache/fc_cache.hpp"
#include "dmcache/keyhash.hpp"
#include "dmcache/workload.hpp"

namespace dmcache {

inline constexpr int kConfigSchema = 1;

enum class TransportKind { kInProc, kTcp };
enum class ClockKind { kLogical, kWall };
enum class PenaltyMode { kVirtual, kSleep };

/// Everything one experiment needs. Stored as flat `key = value` lines; see
/// `config_keys()` for the full list.
struct RunConfig {
  int schema = kConfigSchema;
  TransportKind transport = TransportKind::kInProc;
  std::string tcp_host = "127.0.0.1";
  std::uint16_t tcp_port = 0;  // 0: start a private server in-process
  std::uint32_t clients = 1;
  std::uint64_t cache_capacity_objects = 1000;
  std::uint64_t num_buckets = 0;  // 0: derived from capacity and history length
  std::uint32_t slots_per_bucket = 8;
  std::vector<std::string> experts = {"LRU", "LFU"};
  bool adaptive = true;
  std::uint32_t sample_k = 5;
  bool sample_until_k_live = true;
  std::uint64_t fc_threshold = kDefaultFcThreshold;
  std::uint64_t fc_capacity_bytes = kDefaultFcCapacityBytes;
  double lambda = 0.1;
  std::uint32_t batch_size = 100;
  std::uint64_t history_len = 0;  // 0: cache_capacity_objects
  std::uint64_t counter_refresh_ops = 1000;
  ClockKind clock = ClockKind::kLogical;
  PenaltyMode penalty_mode = PenaltyMode::kVirtual;
  std::uint32_t verb_delay_us = 0;
  std::uint64_t seed = 42;
  std::uint64_t hash_seed = kDefaultHashSeed;
  std::string output;  // path prefix for <output>.json and <output>.csv
  std::uint64_t trajectory_every = 1000;
  WorkloadSpec workload;

  std::uint64_t effective_history_len() const { return history_len ? history_len : cache_capacity_objects; }
  /// The workload with capacity-relative fields filled in.
  WorkloadSpec resolved_workload() const;
  /// Throws Error(kConfig) naming the offending field.
  void validate() const;
  friend bool operator==(const RunConfig&, const RunConfig&);
};

std::vector<std::string> config_keys();

/// Parses `key = value` lines; '#' starts a comment line. Later keys win.
/// Unknown keys and unparsable values raise Error(kConfig) with the line.
RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::filesystem::path& path);
/// Writes every key; parse_config(serialize_config(c)) == c.
std::string serialize_config(const RunConfig& cfg);

/// Applies one `key=value` assignment (same syntax as a config line).
void apply_config_value(RunConfig& cfg, const std::string& key, const std::string& value);

}  // namespace dmcache
