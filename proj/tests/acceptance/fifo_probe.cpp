// Drives real evictions through the pool and checks every history lookup
// against a plain FIFO of consumed counter values. Built against the narrow
// core so the counter wraps within the run.
#include <cstdio>
#include <cstdlib>
#include <deque>
#include <random>
#include <string>
#include <unordered_map>

#include "dmcache/experts.hpp"
#include "dmcache/hash_table.hpp"
#include "dmcache/history.hpp"
#include "dmcache/keyhash.hpp"
#include "dmcache/memory_node.hpp"
#include "dmcache/object_codec.hpp"
#include "dmcache/transport.hpp"

using namespace dmcache;

namespace {

constexpr std::uint64_t kHistoryLen = 1500;

struct Probe {
  Probe() : layout(PoolLayout::make(1024, 8, 64 * 64)), node(layout.node_options(2)), t(node), table(layout.table) {}

  std::uint64_t counter() { return t.read_word(layout.counter_addr); }

  // Inserts a fresh key and returns its slot, or false if the bucket is full.
  bool put(const std::string& key, Slot& out) {
    const std::uint64_t h = table.hash(key);
    const SearchResult r = table.search(t, key, {counter(), kHistoryLen});
    if (!r.free_slot) return false;
    const std::uint64_t addr = t.alloc(64);
    t.write(addr, encode_object({}, key, "v"));
    InstallMetadata m;
    m.kind = InstallMetadata::Kind::kFull;
    m.meta = {1, 1, 1, h};
    if (!table.install_slot(t, *r.free_slot, SlotAtomic{fingerprint(h), 1, addr}, m).success) return false;
    out = *table.search(t, key, {counter(), kHistoryLen}).found;
    return true;
  }

  PoolLayout layout;
  MemoryNode node;
  InProcTransport t;
  HashTable table;
};

}  // namespace

int main(int argc, char** argv) {
  const std::uint64_t evictions = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 100000;
  const std::uint64_t queries = argc > 2 ? std::strtoull(argv[2], nullptr, 10) : 100000;
  std::mt19937_64 rng(argc > 3 ? std::strtoull(argv[3], nullptr, 10) : 1);

  Probe p;
  // Front is the most recent consumed ID; empty string marks the skipped tombstone ID.
  std::deque<std::string> fifo;
  std::vector<std::string> evicted;
  std::uint64_t mismatches = 0, full = 0, done_evictions = 0, done_queries = 0, valid_hits = 0;

  auto check = [&](const std::string& key) {
    ++done_queries;
    const std::uint64_t c = p.counter();
    const SearchResult r = p.table.search(p.t, key, {c, kHistoryLen});
    std::uint64_t oracle_pos = 0;
    bool oracle_valid = false;
    for (std::uint64_t i = 0; i < fifo.size(); ++i) {
      if (fifo[i] == key) {
        oracle_valid = true;
        oracle_pos = i;
        break;
      }
    }
    bool got_valid = false;
    std::uint64_t got_pos = 0;
    for (const Slot& s : r.history_matches) {
      if (!history_valid(s.atomic.pointer, c, kHistoryLen)) continue;
      if (got_valid) ++mismatches;  // two valid records for one key
      got_valid = true;
      got_pos = history_position(c, s.atomic.pointer);
    }
    if (got_valid) ++valid_hits;
    if (got_valid != oracle_valid || (got_valid && got_pos != oracle_pos)) {
      if (mismatches < 10) {
        std::fprintf(stderr, "mismatch key=%s counter=%llu oracle=%d/%llu pool=%d/%llu\n", key.c_str(),
                     (unsigned long long)c, oracle_valid, (unsigned long long)oracle_pos, got_valid,
                     (unsigned long long)got_pos);
      }
      ++mismatches;
    }
  };

  std::uint64_t next_key = 0;
  std::uint64_t oracle_counter = 0;
  while (done_evictions < evictions || done_queries < queries) {
    const bool evict = done_queries >= queries || (done_evictions < evictions && rng() % 2 == 0);
    if (evict) {
      const std::string key = "key-" + std::to_string(next_key++);
      Slot s;
      if (!p.put(key, s)) {
        ++full;
        continue;
      }
      const EvictOutcome out = evict_to_history(p.t, p.table, p.layout.counter_addr, s, 1 + rng() % 3);
      if (!out.success) {
        std::fprintf(stderr, "uncontended eviction failed\n");
        return 2;
      }
      // The oracle hands out IDs itself; the reserved all-ones ID is burned.
      if ((oracle_counter & history_mask()) == tombstone_id()) {
        fifo.emplace_front();
        ++oracle_counter;
      }
      if (out.history_id != (oracle_counter & history_mask())) ++mismatches;
      ++oracle_counter;
      fifo.push_front(key);
      while (fifo.size() > kHistoryLen) fifo.pop_back();
      evicted.push_back(key);
      ++done_evictions;
    } else if (!evicted.empty()) {
      // Mostly recent keys so both sides of the window are exercised.
      const std::uint64_t span = std::min<std::uint64_t>(evicted.size(), 2 * kHistoryLen);
      check(rng() % 8 ? evicted[evicted.size() - 1 - rng() % span] : "never-" + std::to_string(rng()));
    } else {
      check("never");
    }
  }

  const std::uint64_t wraps = p.counter() >> kHistoryIdBits;
  std::printf("fifo_probe bits=%u l=%llu evictions=%llu queries=%llu valid=%llu wraps=%llu full=%llu mismatches=%llu\n",
              kHistoryIdBits, (unsigned long long)kHistoryLen, (unsigned long long)done_evictions,
              (unsigned long long)done_queries, (unsigned long long)valid_hits, (unsigned long long)wraps,
              (unsigned long long)full, (unsigned long long)mismatches);
  return mismatches == 0 && wraps >= 1 ? 0 : 1;
}
