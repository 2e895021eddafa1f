#include "dmcache/hash_table.hpp"

#include <algorithm>
#include <cstring>
#include <string>

#include "dmcache/errors.hpp"
#include "dmcache/history.hpp"
#include "dmcache/object_codec.hpp"

namespace dmcache {

namespace {

std::uint64_t align64(std::uint64_t v) { return (v + kBlockBytes - 1) / kBlockBytes * kBlockBytes; }

std::uint64_t load_u64(const std::byte* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t(std::to_integer<std::uint8_t>(p[i])) << (8 * i);
  return v;
}

}  // namespace

void TableConfig::validate() const {
  if (num_buckets == 0 || (num_buckets & (num_buckets - 1)) != 0) {
    throw Error(ErrorCode::kConfig, "num_buckets must be a power of two, got " + std::to_string(num_buckets));
  }
  if (slots_per_bucket == 0) throw Error(ErrorCode::kConfig, "slots_per_bucket must be positive");
}

PoolLayout PoolLayout::make(std::uint64_t num_buckets, std::uint32_t slots_per_bucket, std::uint64_t heap_bytes) {
  PoolLayout layout;
  layout.counter_addr = 0;
  layout.table.num_buckets = num_buckets;
  layout.table.slots_per_bucket = slots_per_bucket;
  layout.table.table_base = kBlockBytes;
  layout.table.validate();
  layout.heap_base = align64(layout.table.table_base + layout.table.table_bytes());
  layout.capacity = layout.heap_base + align64(heap_bytes);
  return layout;
}

MemoryNode::Options PoolLayout::node_options(std::size_t num_experts, std::uint32_t verb_delay_us) const {
  MemoryNode::Options o;
  o.capacity = capacity;
  o.heap_base = heap_base;
  o.num_experts = num_experts;
  o.verb_delay_us = verb_delay_us;
  return o;
}

HashTable::HashTable(const TableConfig& cfg, std::uint64_t hash_seed) : cfg_(cfg), seed_(hash_seed) {
  cfg_.validate();
}

BucketRef HashTable::bucket_for_hash(std::uint64_t h) const {
  const std::uint64_t index = h & (cfg_.num_buckets - 1);
  return {index, cfg_.table_base + index * cfg_.bucket_bytes()};
}

std::vector<Slot> HashTable::read_slots(Transport& t, std::uint64_t first_slot, std::uint64_t count) const {
  std::vector<std::byte> raw(count * kSlotBytes);
  t.read(cfg_.slot_addr(first_slot), raw);
  std::vector<Slot> slots;
  slots.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    slots.push_back(decode_slot(cfg_.slot_addr(first_slot + i), std::span(raw).subspan(i * kSlotBytes, kSlotBytes)));
  }
  return slots;
}

std::vector<Slot> HashTable::read_bucket(Transport& t, std::uint64_t bucket_index) const {
  return read_slots(t, bucket_index * cfg_.slots_per_bucket, cfg_.slots_per_bucket);
}

std::vector<Slot> HashTable::sample_slots(Transport& t, std::uint32_t k, std::mt19937_64& rng) const {
  const std::uint64_t total = cfg_.total_slots();
  const std::uint64_t n = std::clamp<std::uint64_t>(k, 1, total);
  std::uniform_int_distribution<std::uint64_t> start(0, total - n);
  return read_slots(t, start(rng), n);
}

std::vector<Slot> HashTable::read_table(Transport& t) const {
  std::vector<Slot> all;
  all.reserve(cfg_.total_slots());
  const std::uint64_t chunk = 4096;
  for (std::uint64_t first = 0; first < cfg_.total_slots(); first += chunk) {
    auto part = read_slots(t, first, std::min(chunk, cfg_.total_slots() - first));
    all.insert(all.end(), part.begin(), part.end());
  }
  return all;
}

bool HashTable::reusable(const Slot& s, const HistoryWindow& window) {
  if (s.word == 0) return true;
  if (!s.atomic.history()) return false;
  return !history_valid_cached(s.atomic.pointer, window.counter, window.length);
}

std::vector<std::byte> HashTable::read_object(Transport& t, const SlotAtomic& atomic) const {
  if (atomic.size != kChainedSize) return t.read(atomic.pointer, static_cast<std::uint32_t>(atomic.size * kBlockBytes));
  std::vector<std::byte> stream;
  std::uint64_t addr = atomic.pointer;
  std::uint64_t blocks = kMaxSegmentBlocks;
  // A chain longer than the heap would be garbage; cap the walk.
  for (int hops = 0; hops < 1 << 16; ++hops) {
    auto seg = t.read(addr, static_cast<std::uint32_t>(blocks * kBlockBytes));
    if (blocks < kMaxSegmentBlocks) {
      stream.insert(stream.end(), seg.begin(), seg.end());
      return stream;
    }
    stream.insert(stream.end(), seg.begin(), seg.end() - kLinkBytes);
    decode_link(load_u64(seg.data() + seg.size() - kLinkBytes), addr, blocks);
    if (blocks == 0 || blocks > kMaxSegmentBlocks) return stream;
  }
  return stream;
}

std::vector<Allocation> HashTable::object_segments(Transport& t, const SlotAtomic& atomic) const {
  if (atomic.size != kChainedSize) return {{atomic.pointer, std::uint64_t{atomic.size} * kBlockBytes}};
  std::vector<Allocation> segs;
  std::uint64_t addr = atomic.pointer;
  std::uint64_t blocks = kMaxSegmentBlocks;
  while (true) {
    segs.push_back({addr, blocks * kBlockBytes});
    if (blocks < kMaxSegmentBlocks) return segs;
    const std::uint64_t link = t.read_word(addr + blocks * kBlockBytes - kLinkBytes);
    decode_link(link, addr, blocks);
    if (blocks == 0 || blocks > kMaxSegmentBlocks || segs.size() > (1u << 16)) return segs;
  }
}

SearchResult HashTable::search(Transport& t, std::string_view key, const HistoryWindow& window) const {
  SearchResult r;
  const std::uint64_t h = hash(key);
  const std::uint8_t fp = fingerprint(h);
  r.bucket = read_bucket(t, bucket_for_hash(h).index);

  std::optional<Slot> reusable_slot;
  for (const Slot& s : r.bucket) {
    if (s.atomic.live()) {
      if (!r.found && s.atomic.fp == fp) {
        auto stream = read_object(t, s.atomic);
        ++r.object_reads;
        auto parts = parse_object(stream);
        if (parts && parts->key == key) {
          r.found = s;
          r.object = std::move(stream);
        } else if (!parts || s.meta.hash == h) {
          r.raced = true;
        }
      }
      continue;
    }
    if (s.word == 0) {
      if (!r.free_slot || !r.free_slot_virgin) {
        r.free_slot = s;
        r.free_slot_virgin = true;
      }
      continue;
    }
    // History entry or tombstone.
    if (s.meta.hash == h && s.atomic.pointer != tombstone_id()) r.history_matches.push_back(s);
    if (!reusable_slot && reusable(s, window)) reusable_slot = s;
  }
  if (!r.free_slot && reusable_slot) r.free_slot = reusable_slot;
  return r;
}

InstallResult HashTable::install_slot(Transport& t, const Slot& target, const SlotAtomic& desired,
                                      const InstallMetadata& meta) const {
  InstallResult r;
  r.observed = t.cas(target.addr, target.word, encode_atomic(desired));
  r.success = r.observed == target.word;
  if (!r.success) return r;
  const auto bytes = encode_metadata(meta.meta);
  switch (meta.kind) {
    case InstallMetadata::Kind::kNone:
      break;
    case InstallMetadata::Kind::kTimestamps:
      t.write(target.addr + kInsertTsOffset, std::span(bytes).first(16));
      break;
    case InstallMetadata::Kind::kFull:
      t.write(target.addr + kInsertTsOffset, bytes);
      break;
  }
  return r;
}

}  // namespace dmcache
