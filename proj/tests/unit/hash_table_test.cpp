#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <random>
#include <set>
#include <thread>

#include "dmcache/errors.hpp"
#include "dmcache/experts.hpp"
#include "dmcache/hash_table.hpp"
#include "dmcache/history.hpp"
#include "dmcache/keyhash.hpp"
#include "dmcache/object_codec.hpp"
#include "dmcache/slot.hpp"
#include "dmcache/transport.hpp"

namespace dmcache {
namespace {

TEST(SlotCodec, AtomicWordLayout) {
  const SlotAtomic s{0xAB, 2, 0x40};
  EXPECT_EQ(encode_atomic(s), 0xAB02000000000040ull);
  EXPECT_EQ(decode_atomic(0xAB02000000000040ull), s);
  EXPECT_EQ(encode_atomic(SlotAtomic{}), 0u);
}

TEST(SlotCodec, RandomRoundTrip) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 100000; ++i) {
    SlotAtomic s{static_cast<std::uint8_t>(rng()), static_cast<std::uint8_t>(rng()), rng() & kPointerMask};
    ASSERT_EQ(decode_atomic(encode_atomic(s)), s);
  }
}

TEST(SlotCodec, GoldenSlotBytes) {
  const SlotAtomic a{0xAB, 2, 0x40};
  const SlotMetadata m{0x11, 0x22, 0x33, 0x0102030405060708ull};
  const auto b = encode_slot(a, m);
  ASSERT_EQ(b.size(), 40u);
  // Little-endian words at offsets 0, 8, 16, 24, 32.
  const std::uint8_t want[40] = {0x40, 0, 0, 0, 0, 0, 0x02, 0xAB, 0x11, 0, 0, 0, 0, 0, 0, 0, 0x22, 0, 0, 0,
                                 0,    0, 0, 0, 0x33, 0, 0, 0, 0, 0, 0, 0, 8, 7, 6, 5, 4, 3, 2, 1};
  for (int i = 0; i < 40; ++i) EXPECT_EQ(static_cast<std::uint8_t>(b[i]), want[i]) << i;
  const Slot s = decode_slot(640, b);
  EXPECT_EQ(s.addr, 640u);
  EXPECT_EQ(s.atomic, a);
  EXPECT_EQ(s.meta, m);
  EXPECT_EQ(kInsertTsOffset + 8, kLastTsOffset);  // stateless pair is adjacent
}

TEST(SlotCodec, SizeField) {
  EXPECT_EQ(size_field_for_blocks(1), 1);
  EXPECT_EQ(size_field_for_blocks(253), 253);
  EXPECT_EQ(size_field_for_blocks(254), kChainedSize);
  EXPECT_EQ(size_field_for_blocks(1000), kChainedSize);
}

TEST(ObjectCodec, RoundTripAndPadding) {
  std::vector<std::byte> ext(16, std::byte{3});
  const auto enc = encode_object(ext, "key", "value");
  EXPECT_EQ(enc.size(), object_stream_bytes(16, 3, 5));
  const auto parts = parse_object(enc);
  ASSERT_TRUE(parts);
  EXPECT_EQ(parts->key, "key");
  EXPECT_EQ(parts->value, "value");
  EXPECT_EQ(parts->ext.size(), 16u);
  EXPECT_FALSE(parse_object(std::span(enc).first(5)));
}

TEST(ObjectCodec, SegmentsAndLinks) {
  EXPECT_EQ(plan_segments(64), (std::vector<std::uint64_t>{1}));
  EXPECT_EQ(plan_segments(65), (std::vector<std::uint64_t>{2}));
  EXPECT_EQ(plan_segments(253 * 64), (std::vector<std::uint64_t>{253}));
  const auto big = plan_segments(300 * 64);
  ASSERT_GE(big.size(), 2u);
  EXPECT_EQ(big.front(), kMaxSegmentBlocks);
  std::uint64_t payload = 0;
  for (std::size_t i = 0; i < big.size(); ++i) payload += segment_payload_bytes(big[i], i + 1 < big.size());
  EXPECT_GE(payload, 300u * 64);
  std::uint64_t addr = 0, blocks = 0;
  decode_link(encode_link(0xABCDEF40, 17), addr, blocks);
  EXPECT_EQ(addr, 0xABCDEF40u);
  EXPECT_EQ(blocks, 17u);
}

struct TableRig {
  explicit TableRig(std::uint64_t buckets = 64, std::uint64_t heap = 64 * 1024)
      : layout(PoolLayout::make(buckets, 8, heap)), node(layout.node_options(2)), t(node), table(layout.table) {}

  Slot put(const std::string& key, const std::string& value, HistoryWindow w = {0, 8}) {
    const auto stream = encode_object({}, key, value);
    const auto blocks = plan_segments(stream.size()).front();
    const auto addr = t.alloc(blocks * kBlockBytes);
    t.write(addr, stream);
    const SearchResult r = table.search(t, key, w);
    EXPECT_TRUE(r.free_slot);
    const std::uint64_t h = table.hash(key);
    SlotAtomic a{fingerprint(h), size_field_for_blocks(blocks), addr};
    InstallMetadata meta;
    meta.kind = InstallMetadata::Kind::kFull;
    meta.meta = {1, 1, 1, h};
    EXPECT_TRUE(table.install_slot(t, *r.free_slot, a, meta).success);
    return table.search(t, key, w).found.value();
  }

  PoolLayout layout;
  MemoryNode node;
  InProcTransport t;
  HashTable table;
};

TEST(HashTable, LayoutIsAligned) {
  const PoolLayout l = PoolLayout::make(64, 8, 4096);
  EXPECT_EQ(l.counter_addr, 0u);
  EXPECT_EQ(l.table.table_base % 64, 0u);
  EXPECT_EQ(l.table.table_bytes(), 64u * 8 * 40);
  EXPECT_EQ(l.heap_base % 64, 0u);
  EXPECT_GE(l.heap_base, l.table.table_base + l.table.table_bytes());
  EXPECT_EQ(l.capacity, l.heap_base + 4096);
  EXPECT_THROW(PoolLayout::make(63, 8, 64), Error);
}

TEST(HashTable, BucketOfIsDeterministicAndInBounds) {
  TableRig r;
  for (int i = 0; i < 1000; ++i) {
    const std::string k = "key" + std::to_string(i);
    const BucketRef b = r.table.bucket_of(k);
    EXPECT_EQ(b.index, r.table.bucket_of(k).index);
    EXPECT_EQ(b.index, keyhash(k) % 64);
    EXPECT_EQ(b.addr, r.layout.table.table_base + b.index * 8 * 40);
  }
}

// Chi-square over 64 buckets; 99.9% critical value for 63 dof is ~103.4.
TEST(HashTable, BucketDistributionChiSquare) {
  TableRig r;
  std::vector<double> counts(64, 0);
  const int n = 64000;
  for (int i = 0; i < n; ++i) counts[r.table.bucket_of("user" + std::to_string(i * 7919)).index] += 1;
  const double expected = double(n) / 64;
  double chi = 0;
  for (double c : counts) chi += (c - expected) * (c - expected) / expected;
  EXPECT_LT(chi, 103.4);
}

TEST(HashTable, SearchFoundIsTwoReads) {
  TableRig r;
  const Slot s = r.put("alpha", "one");
  const VerbStats before = r.t.stats();
  const SearchResult got = r.table.search(r.t, "alpha", {0, 8});
  const VerbStats d = r.t.stats() - before;
  ASSERT_TRUE(got.found);
  EXPECT_EQ(got.found->atomic.pointer, s.atomic.pointer);
  EXPECT_EQ(d.reads, 2u);
  EXPECT_EQ(d.bytes_read, 8u * 40 + 64);
  EXPECT_EQ(parse_object(got.object)->value, "one");
}

TEST(HashTable, MissOnEmptyTable) {
  TableRig r;
  const VerbStats before = r.t.stats();
  const SearchResult got = r.table.search(r.t, "nobody", {0, 8});
  EXPECT_FALSE(got.found);
  EXPECT_TRUE(got.history_matches.empty());
  EXPECT_TRUE(got.free_slot_virgin);
  EXPECT_EQ((r.t.stats() - before).reads, 1u);
}

TEST(HashTable, EvictedKeyLeavesHistoryMatch) {
  TableRig r;
  const Slot s = r.put("beta", "two");
  const EvictOutcome out = evict_to_history(r.t, r.table, r.layout.counter_addr, s, 0b10);
  ASSERT_TRUE(out.success);
  const SearchResult got = r.table.search(r.t, "beta", {r.t.read_word(0), 8});
  EXPECT_FALSE(got.found);
  ASSERT_EQ(got.history_matches.size(), 1u);
  EXPECT_EQ(got.history_matches[0].expert_bmap(), 0b10u);
  EXPECT_EQ(got.history_matches[0].atomic.fp, s.atomic.fp);  // fp preserved
  EXPECT_EQ(got.history_matches[0].meta.hash, r.table.hash("beta"));
}

TEST(HashTable, BitmapFromAnotherWriteIsRejected) {
  TableRig r;
  const Slot s = r.put("beta", "two");
  const EvictOutcome out = evict_to_history(r.t, r.table, r.layout.counter_addr, s, 0b10);
  ASSERT_TRUE(out.success);
  auto bmap_after = [&](std::uint64_t word) {
    r.t.write_word(s.addr + kInsertTsOffset, word);
    return r.table.search(r.t, "beta", {r.t.read_word(0), 8}).history_matches.at(0);
  };
  EXPECT_TRUE(bmap_after(encode_history_bitmap(out.history_id, 0b10)).bitmap_intact());
  EXPECT_EQ(bmap_after(424242).expert_bmap(), 0u);  // a timestamp
  EXPECT_EQ(bmap_after(encode_history_bitmap(out.history_id + 1, 0b10)).expert_bmap(), 0u);  // another eviction's
  EXPECT_FALSE(bmap_after(encode_history_bitmap(out.history_id + 1, 0b10)).bitmap_intact());
}

TEST(HashTable, ExpiredHistorySlotIsReusable) {
  TableRig r(1);  // one bucket of 8 slots
  std::vector<Slot> slots;
  for (int i = 0; i < 8; ++i) slots.push_back(r.put("k" + std::to_string(i), "v"));
  EXPECT_FALSE(r.table.search(r.t, "fresh", {0, 2}).free_slot);
  ASSERT_TRUE(evict_to_history(r.t, r.table, 0, slots[0], 1).success);
  std::uint64_t counter = r.t.read_word(0);
  EXPECT_FALSE(r.table.search(r.t, "fresh", {counter, 2}).free_slot);  // still valid
  r.t.faa(0, 5);  // five later evictions elsewhere
  counter = r.t.read_word(0);
  const SearchResult got = r.table.search(r.t, "fresh", {counter, 2});
  ASSERT_TRUE(got.free_slot);
  EXPECT_EQ(got.free_slot->addr, slots[0].addr);
  EXPECT_FALSE(got.free_slot_virgin);
  r.put("fresh", "v", {counter, 2});  // installs over the expired entry
  EXPECT_TRUE(r.table.search(r.t, "fresh", {counter, 2}).found);
}

// The key's slot still points at a block that now holds another object.
TEST(HashTable, ReusedObjectFlagsRace) {
  TableRig r;
  const Slot s = r.put("victim", "v");
  const auto other = encode_object({}, "intruder", "v");
  r.t.write(s.atomic.pointer, other);
  const SearchResult got = r.table.search(r.t, "victim", {0, 8});
  EXPECT_FALSE(got.found);
  EXPECT_TRUE(got.raced);
  EXPECT_FALSE(r.table.search(r.t, "someone-else", {0, 8}).raced);
}

TEST(HashTable, RacingInstallsOneWinner) {
  for (int round = 0; round < 50; ++round) {
    TableRig r;
    const SearchResult s = r.table.search(r.t, "same", {0, 8});
    std::atomic<int> wins{0};
    std::vector<std::thread> ts;
    for (int i = 0; i < 4; ++i) {
      ts.emplace_back([&, i] {
        InProcTransport t(r.node);
        InstallMetadata m;
        m.kind = InstallMetadata::Kind::kFull;
        if (r.table.install_slot(t, *s.free_slot, SlotAtomic{1, 1, 4096u + 64u * i}, m).success) ++wins;
      });
    }
    for (auto& t : ts) t.join();
    ASSERT_EQ(wins.load(), 1);
  }
}

TEST(HashTable, SampleIsOneRead) {
  TableRig r;
  std::mt19937_64 rng(5);
  const VerbStats before = r.t.stats();
  const auto s = r.table.sample_slots(r.t, 5, rng);
  const VerbStats d = r.t.stats() - before;
  EXPECT_EQ(s.size(), 5u);
  EXPECT_EQ(d.reads, 1u);
  EXPECT_EQ(d.bytes_read, 200u);
  for (std::size_t i = 1; i < s.size(); ++i) EXPECT_EQ(s[i].addr, s[i - 1].addr + 40);
  const auto all = r.table.sample_slots(r.t, 512, rng);
  EXPECT_EQ(all.front().addr, r.layout.table.table_base);
}

TEST(HashTable, SampleCoversEverySlot) {
  TableRig r(8);  // 64 slots
  std::mt19937_64 rng(9);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 2000; ++i) {
    for (const Slot& s : r.table.sample_slots(r.t, 5, rng)) seen.insert(s.addr);
  }
  EXPECT_EQ(seen.size(), 64u);
}

TEST(HashTable, ChainedObjectRoundTrip) {
  TableRig r(64, 64 * 1024);
  const std::string key = "large";
  const std::string value(300 * 64, 'z');
  const auto stream = encode_object({}, key, value);
  const auto plan = plan_segments(stream.size());
  ASSERT_GE(plan.size(), 2u);
  std::vector<std::uint64_t> addrs;
  for (auto b : plan) addrs.push_back(r.t.alloc(b * 64));
  std::size_t off = 0;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    const bool link = i + 1 < plan.size();
    std::vector<std::byte> buf(plan[i] * 64);
    const auto n = std::min<std::size_t>(segment_payload_bytes(plan[i], link), stream.size() - off);
    std::copy_n(stream.begin() + off, n, buf.begin());
    off += n;
    if (link) {
      const std::uint64_t l = encode_link(addrs[i + 1], plan[i + 1]);
      std::memcpy(buf.data() + segment_payload_bytes(plan[i], true), &l, 8);
    }
    r.t.write(addrs[i], buf);
  }
  const SlotAtomic a{fingerprint(r.table.hash(key)), kChainedSize, addrs[0]};
  const auto obj = r.table.read_object(r.t, a);
  EXPECT_EQ(parse_object(obj)->value, value);
  EXPECT_EQ(r.table.object_segments(r.t, a).size(), plan.size());
}

}  // namespace
}  // namespace dmcache
