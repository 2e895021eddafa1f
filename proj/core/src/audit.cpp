#include "dmcache/audit.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include "dmcache/errors.hpp"
#include "dmcache/history.hpp"
#include "dmcache/keyhash.hpp"
#include "dmcache/object_codec.hpp"

namespace dmcache {

bool AuditReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const AuditCheck& c) { return c.passed; });
}

const AuditCheck* AuditReport::find(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

std::string AuditReport::to_text() const {
  std::ostringstream os;
  for (const auto& c : checks) {
    os << (c.passed ? "PASS " : "FAIL ") << c.name;
    if (!c.detail.empty()) os << "  (" << c.detail << ")";
    os << "\n";
  }
  return os.str();
}

void track_frequency_words(MemoryNode& node, const PoolLayout& layout) {
  node.track_overwrites(layout.table.table_base, kSlotBytes, kFreqOffset, layout.table.total_slots());
}

void inject_hash_fault(MemoryNode& node, const PoolLayout& layout) {
  InProcTransport t(node);
  const HashTable table(layout.table);
  for (const Slot& s : table.read_table(t)) {
    if (!s.atomic.live()) continue;
    t.write_word(s.addr + kHashOffset, s.meta.hash ^ 0x1);
    return;
  }
  throw Error(ErrorCode::kInvalidArgument, "no live slot to corrupt");
}

namespace {

template <typename... Args>
std::string cat(Args&&... args) {
  std::ostringstream os;
  (os << ... << args);
  return os.str();
}

struct Failure {
  std::size_t count = 0;
  std::string first;
  void add(std::string what) {
    if (count++ == 0) first = std::move(what);
  }
  AuditCheck check(std::string name, std::string ok_detail) const {
    if (count == 0) return {std::move(name), true, std::move(ok_detail)};
    return {std::move(name), false, cat(count, " violation(s); first: ", first)};
  }
};

}  // namespace

AuditReport audit_pool(MemoryNode& node, const PoolLayout& layout, std::uint64_t hash_seed,
                       const AuditExpectations& expect) {
  InProcTransport t(node);
  const HashTable table(layout.table, hash_seed);
  const std::vector<Slot> slots = table.read_table(t);
  AuditReport report;

  // Live slots with their decoded keys and segments.
  struct LiveObject {
    const Slot* slot;
    std::string key;
    std::vector<Allocation> segments;
  };
  std::vector<LiveObject> live;
  Failure slot_fail;
  for (const Slot& s : slots) {
    if (s.word != 0 && s.atomic.empty()) slot_fail.add(cat("slot 0x", std::hex, s.addr, " has size 0 but nonzero word"));
    if (!s.atomic.live()) continue;
    LiveObject obj{&s, {}, table.object_segments(t, s.atomic)};
    const auto stream = table.read_object(t, s.atomic);
    const auto parts = parse_object(stream);
    if (!parts) {
      slot_fail.add(cat("slot 0x", std::hex, s.addr, " points at a malformed object"));
      live.push_back(std::move(obj));
      continue;
    }
    obj.key = std::string(parts->key);
    const std::uint64_t h = keyhash(obj.key, hash_seed);
    if (h != s.meta.hash) slot_fail.add(cat("slot 0x", std::hex, s.addr, " hash field differs from keyhash(key)"));
    if (fingerprint(h) != s.atomic.fp) slot_fail.add(cat("slot 0x", std::hex, s.addr, " fingerprint differs"));
    if (s.atomic.size != kChainedSize) {
      const auto planned = plan_segments(object_stream_bytes(parts->ext.size(), parts->key.size(), parts->value.size()));
      if (planned.size() != 1 || planned[0] != s.atomic.size) {
        slot_fail.add(cat("slot 0x", std::hex, s.addr, " size field disagrees with the object"));
      }
    }
    live.push_back(std::move(obj));
  }
  report.checks.push_back(slot_fail.check("slot_consistency", cat(live.size(), " live slots")));

  // Allocator: live allocations disjoint, aligned, in the heap, each owned by
  // exactly one live slot.
  Failure alloc_fail;
  const auto allocations = node.controller().live_allocations();
  std::uint64_t prev_end = layout.heap_base;
  std::uint64_t live_bytes = 0;
  std::map<std::uint64_t, std::uint64_t> by_addr;
  for (const Allocation& a : allocations) {
    if (a.addr % kBlockBytes || a.bytes % kBlockBytes || a.bytes == 0) alloc_fail.add(cat("misaligned allocation at ", a.addr));
    if (a.addr < prev_end) alloc_fail.add(cat("overlapping allocation at ", a.addr));
    if (a.addr + a.bytes > node.controller().heap_end()) alloc_fail.add(cat("allocation past heap end at ", a.addr));
    prev_end = a.addr + a.bytes;
    live_bytes += a.bytes;
    by_addr[a.addr] = a.bytes;
  }
  if (live_bytes + node.controller().free_bytes() != node.controller().heap_end() - node.controller().heap_base()) {
    alloc_fail.add("live + free bytes differ from heap size");
  }
  std::map<std::uint64_t, int> owners;
  for (const LiveObject& o : live) {
    for (const Allocation& seg : o.segments) {
      auto it = by_addr.find(seg.addr);
      if (it == by_addr.end()) {
        alloc_fail.add(cat("slot 0x", std::hex, o.slot->addr, " points at unallocated 0x", seg.addr));
      } else if (it->second != seg.bytes) {
        alloc_fail.add(cat("slot 0x", std::hex, o.slot->addr, " segment size differs from its allocation"));
      }
      ++owners[seg.addr];
    }
  }
  for (const auto& [addr, n] : owners) {
    if (n > 1) alloc_fail.add(cat("allocation 0x", std::hex, addr, " referenced by ", std::dec, n, " slots"));
  }
  for (const Allocation& a : allocations) {
    if (!owners.count(a.addr)) alloc_fail.add(cat("leaked allocation 0x", std::hex, a.addr));
  }
  report.checks.push_back(alloc_fail.check("allocator_soundness", cat(allocations.size(), " live allocations")));

  Failure dup_fail;
  std::unordered_map<std::string, std::uint64_t> seen;
  for (const LiveObject& o : live) {
    if (o.key.empty()) continue;
    auto [it, fresh] = seen.emplace(o.key, o.slot->addr);
    if (!fresh) dup_fail.add(cat("key '", o.key, "' live at 0x", std::hex, it->second, " and 0x", o.slot->addr));
  }
  report.checks.push_back(dup_fail.check("unique_live_keys", cat(seen.size(), " distinct keys")));

  std::uint64_t freq_sum = 0;
  for (const Slot& s : slots) freq_sum += s.meta.freq;
  const std::uint64_t accounted = freq_sum + node.overwritten_sum();
  report.checks.push_back(
      {"frequency_conservation", accounted == expect.accesses,
       cat("slot freq ", freq_sum, " + overwritten ", node.overwritten_sum(), " = ", accounted, ", accesses ",
           expect.accesses)});

  Failure hist_fail;
  const std::uint64_t counter = t.read_word(layout.counter_addr);
  const std::uint32_t mask = expect.num_experts >= 32 ? 0xFFFFFFFFu : (1u << expect.num_experts) - 1;
  std::set<std::uint64_t> ids;
  std::size_t entries = 0;
  std::size_t overwritten = 0;
  for (const Slot& s : slots) {
    if (!s.atomic.history() || s.atomic.pointer == tombstone_id()) continue;
    ++entries;
    if (s.bitmap_intact()) {
      const std::uint32_t bmap = s.expert_bmap();
      if (bmap == 0 || (bmap & ~mask) != 0) {
        hist_fail.add(cat("history entry 0x", std::hex, s.addr, " has bitmap 0x", bmap));
      }
    } else if (s.meta.insert_ts >> 48 != 0 && s.meta.insert_ts >> 48 != kBitmapMarker >> 48) {
      // Late WRITEs leave a timestamp or another eviction's tag; anything else is corruption.
      hist_fail.add(cat("history entry 0x", std::hex, s.addr, " has bitmap word 0x", s.meta.insert_ts));
    } else {
      ++overwritten;
    }
    if (s.atomic.pointer > history_mask()) hist_fail.add(cat("history id out of range at 0x", std::hex, s.addr));
    if (counter < history_modulus() && s.atomic.pointer >= counter) {
      hist_fail.add(cat("history id ", s.atomic.pointer, " was never handed out (counter ", counter, ")"));
    }
    if (!ids.insert(s.atomic.pointer).second) hist_fail.add(cat("history id ", s.atomic.pointer, " appears twice"));
  }
  report.checks.push_back(hist_fail.check("history_well_formed",
                                                 cat(entries, " history entries, ", overwritten, " bitmaps overwritten")));

  Failure count_fail;
  if (!(expect.node_stats == expect.client_stats)) count_fail.add("node verb counters differ from client counters");
  if (counter != expect.history_faas) {
    count_fail.add(cat("history counter ", counter, " but clients issued ", expect.history_faas, " FAAs"));
  }
  if (expect.node_stats.faa != expect.fc_flushes + expect.history_faas) {
    count_fail.add(cat("node saw ", expect.node_stats.faa, " FAAs, clients account for ",
                       expect.fc_flushes + expect.history_faas));
  }
  report.checks.push_back(count_fail.check(
      "counters_consistent", cat(expect.node_stats.total_verbs(), " verbs, counter ", counter)));
  return report;
}

}  // namespace dmcache
