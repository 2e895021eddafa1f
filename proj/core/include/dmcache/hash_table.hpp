#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string_view>
#include <vector>

#include "dmcache/keyhash.hpp"
#include "dmcache/memory_node.hpp"
#include "dmcache/slot.hpp"
#include "dmcache/transport.hpp"

namespace dmcache {

struct TableConfig {
  std::uint64_t num_buckets = 0;  // power of two
  std::uint32_t slots_per_bucket = 8;
  std::uint64_t table_base = 0;

  std::uint64_t total_slots() const { return num_buckets * slots_per_bucket; }
  std::uint64_t bucket_bytes() const { return std::uint64_t{slots_per_bucket} * kSlotBytes; }
  std::uint64_t table_bytes() const { return total_slots() * kSlotBytes; }
  std::uint64_t slot_addr(std::uint64_t slot_index) const { return table_base + slot_index * kSlotBytes; }
  void validate() const;
};

/// Fixed placement of shared structures in the memory node:
/// [history counter | pad to 64] [hash table] [pad to 64] [object heap].
struct PoolLayout {
  std::uint64_t counter_addr = 0;
  TableConfig table;
  std::uint64_t heap_base = 0;
  std::uint64_t capacity = 0;

  static PoolLayout make(std::uint64_t num_buckets, std::uint32_t slots_per_bucket, std::uint64_t heap_bytes);
  MemoryNode::Options node_options(std::size_t num_experts, std::uint32_t verb_delay_us = 0) const;
};

struct BucketRef {
  std::uint64_t index = 0;
  std::uint64_t addr = 0;
};

/// Client's view of the logical FIFO used to tell valid history entries from
/// expired ones (which count as free slots).
struct HistoryWindow {
  std::uint64_t counter = 0;
  std::uint64_t length = 0;
};

struct SearchResult {
  std::vector<Slot> bucket;
  std::optional<Slot> found;
  std::vector<std::byte> object;       // stream of the found object
  std::vector<Slot> history_matches;   // history entries whose hash equals the key's
  std::optional<Slot> free_slot;       // first never-used slot, else first reusable one
  bool free_slot_virgin = false;       // free_slot has never held anything
  std::uint32_t object_reads = 0;      // confirmation READs issued
  // A candidate slot's object changed under the read (freed and reused), so
  // "not found" cannot be trusted. Search again.
  bool raced = false;
};

struct InstallMetadata {
  enum class Kind { kNone, kTimestamps, kFull };
  Kind kind = Kind::kNone;
  SlotMetadata meta;
};

struct InstallResult {
  bool success = false;
  std::uint64_t observed = 0;
};

/// Sample-friendly hash table. Stateless over the transport; any number of
/// clients may use it concurrently.
class HashTable {
 public:
  explicit HashTable(const TableConfig& cfg, std::uint64_t hash_seed = kDefaultHashSeed);

  const TableConfig& config() const { return cfg_; }
  std::uint64_t hash(std::string_view key) const { return keyhash(key, seed_); }
  BucketRef bucket_of(std::string_view key) const { return bucket_for_hash(hash(key)); }
  BucketRef bucket_for_hash(std::uint64_t h) const;

  /// One READ of the whole bucket.
  std::vector<Slot> read_bucket(Transport& t, std::uint64_t bucket_index) const;
  /// One READ of `count` contiguous slots.
  std::vector<Slot> read_slots(Transport& t, std::uint64_t first_slot, std::uint64_t count) const;
  /// One READ of k contiguous slots at a uniformly random offset.
  std::vector<Slot> sample_slots(Transport& t, std::uint32_t k, std::mt19937_64& rng) const;
  /// Whole table, in chunked READs. Audit use.
  std::vector<Slot> read_table(Transport& t) const;

  /// Bucket READ plus one object READ per fingerprint candidate until the
  /// full key matches.
  SearchResult search(Transport& t, std::string_view key, const HistoryWindow& window) const;

  /// CAS the atomic word; on success write the requested metadata with one
  /// WRITE.
  InstallResult install_slot(Transport& t, const Slot& target, const SlotAtomic& desired,
                             const InstallMetadata& meta) const;

  /// Reads an object's full stream, following chain links.
  std::vector<std::byte> read_object(Transport& t, const SlotAtomic& atomic) const;
  /// Segments holding an object; reads links for chained objects.
  std::vector<Allocation> object_segments(Transport& t, const SlotAtomic& atomic) const;

  /// True when `s` may be overwritten by an insert under `window`.
  static bool reusable(const Slot& s, const HistoryWindow& window);

 private:
  TableConfig cfg_;
  std::uint64_t seed_;
};

}  // namespace dmcache
