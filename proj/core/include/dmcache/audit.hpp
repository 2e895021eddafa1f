#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dmcache/hash_table.hpp"
#include "dmcache/memory_node.hpp"
#include "dmcache/verb_stats.hpp"

namespace dmcache {

struct AuditCheck {
  std::string name;
  bool passed = true;
  std::string detail;
};

struct AuditReport {
  std::vector<AuditCheck> checks;
  bool passed() const;
  const AuditCheck* find(const std::string& name) const;
  std::string to_text() const;
};

/// What the clients did, as they report it, plus the node's own counters
/// captured when they stopped.
struct AuditExpectations {
  VerbStats node_stats;
  VerbStats client_stats;
  std::uint64_t accesses = 0;
  std::uint64_t history_faas = 0;
  std::uint64_t fc_flushes = 0;
  std::uint32_t num_experts = 1;
};

/// Full scan of a quiescent pool. Every frequency buffer must have been
/// flushed and overwrite tracking enabled on the freq words before the run.
/// Checks, in order: slot_consistency, allocator_soundness, unique_live_keys,
/// frequency_conservation, history_well_formed, counters_consistent.
AuditReport audit_pool(MemoryNode& node, const PoolLayout& layout, std::uint64_t hash_seed,
                       const AuditExpectations& expect);

/// Test hook: corrupts the stored hash of the first live slot.
void inject_hash_fault(MemoryNode& node, const PoolLayout& layout);

/// Enables overwrite accounting for every slot's freq word.
void track_frequency_words(MemoryNode& node, const PoolLayout& layout);

}  // namespace dmcache
