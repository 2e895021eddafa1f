#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <random>
#include <set>
#include <thread>

#include "dmcache/errors.hpp"
#include "dmcache/memory_node.hpp"
#include "dmcache/transport.hpp"

namespace dmcache {
namespace {

MemoryNode::Options opts(std::uint64_t capacity, std::uint64_t heap_base = 0, std::size_t experts = 2) {
  MemoryNode::Options o;
  o.capacity = capacity;
  o.heap_base = heap_base;
  o.num_experts = experts;
  return o;
}

std::vector<std::byte> word_bytes(std::uint64_t v) {
  std::vector<std::byte> b(8);
  std::memcpy(b.data(), &v, 8);
  return b;
}

std::uint64_t as_word(const std::vector<std::byte>& b) {
  std::uint64_t v = 0;
  std::memcpy(&v, b.data(), 8);
  return v;
}

void expect_code(ErrorCode code, const std::function<void()>& fn) {
  try {
    fn();
    ADD_FAILURE() << "expected " << error_code_name(code);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}

TEST(MemoryNode, WriteThenReadWord) {
  MemoryNode node(opts(4096));
  node.write(0, word_bytes(0x0102030405060708ull));
  EXPECT_EQ(as_word(node.read(0, 8)), 0x0102030405060708ull);
}

TEST(MemoryNode, ZeroBlockRoundTrip) {
  MemoryNode node(opts(4096));
  node.write(64, std::vector<std::byte>(64, std::byte{0x5A}));
  node.write(64, std::vector<std::byte>(64, std::byte{0}));
  const auto got = node.read(64, 64);
  EXPECT_TRUE(std::all_of(got.begin(), got.end(), [](std::byte b) { return b == std::byte{0}; }));
}

TEST(MemoryNode, UnalignedSpansRoundTrip) {
  MemoryNode node(opts(4096));
  std::vector<std::byte> data(37);
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = std::byte(i * 7 + 1);
  node.write(13, data);
  EXPECT_EQ(node.read(13, 37), data);
}

TEST(MemoryNode, OutOfRange) {
  MemoryNode node(opts(4096));
  expect_code(ErrorCode::kOutOfRange, [&] { node.read(4096 - 4, 8); });
  expect_code(ErrorCode::kOutOfRange, [&] { node.write(4096, word_bytes(1)); });
  expect_code(ErrorCode::kOutOfRange, [&] { node.cas(4096, 0, 1); });
  expect_code(ErrorCode::kOutOfRange, [&] { node.read(~std::uint64_t{0} - 2, 8); });
}

TEST(MemoryNode, Misaligned) {
  MemoryNode node(opts(4096));
  expect_code(ErrorCode::kMisaligned, [&] { node.cas(4, 0, 1); });
  expect_code(ErrorCode::kMisaligned, [&] { node.faa(12, 1); });
}

TEST(MemoryNode, CasSemantics) {
  MemoryNode node(opts(4096));
  node.write(8, word_bytes(5));
  EXPECT_EQ(node.cas(8, 5, 9), 5u);
  EXPECT_EQ(as_word(node.read(8, 8)), 9u);
  EXPECT_EQ(node.cas(8, 4, 11), 9u);
  EXPECT_EQ(as_word(node.read(8, 8)), 9u);
}

TEST(MemoryNode, FaaSemantics) {
  MemoryNode node(opts(4096));
  node.write(16, word_bytes(7));
  EXPECT_EQ(node.faa(16, 1), 7u);
  EXPECT_EQ(as_word(node.read(16, 8)), 8u);
  EXPECT_EQ(node.faa(24, 10), 0u);
  EXPECT_EQ(as_word(node.read(24, 8)), 10u);
  node.write(32, word_bytes(~std::uint64_t{0}));
  node.faa(32, 2);
  EXPECT_EQ(as_word(node.read(32, 8)), 1u);  // wraps at 2^64
}

TEST(MemoryNode, CountersExact) {
  MemoryNode node(opts(4096, 1024));
  node.read(0, 40);
  node.write(0, word_bytes(1));
  node.cas(0, 1, 2);
  node.faa(0, 1);
  const auto a = node.alloc(100);
  node.free(a);
  node.rpc_apply_penalties(std::vector<double>{0.0, 0.0});
  const VerbStats s = node.stats();
  EXPECT_EQ(s.reads, 1u);
  EXPECT_EQ(s.writes, 1u);
  EXPECT_EQ(s.cas, 1u);
  EXPECT_EQ(s.faa, 1u);
  EXPECT_EQ(s.allocs, 1u);
  EXPECT_EQ(s.frees, 1u);
  EXPECT_EQ(s.rpcs, 1u);
  EXPECT_EQ(s.bytes_read, 40u);
  EXPECT_EQ(s.bytes_written, 8u);
}

TEST(MemoryNode, ConcurrentCasIncrementLoop) {
  MemoryNode node(opts(4096));
  constexpr int kThreads = 4;
  constexpr int kEach = 5000;
  std::vector<std::thread> ts;
  for (int i = 0; i < kThreads; ++i) {
    ts.emplace_back([&] {
      for (int j = 0; j < kEach; ++j) {
        std::uint64_t seen = as_word(node.read(0, 8));
        while (true) {
          const std::uint64_t got = node.cas(0, seen, seen + 1);
          if (got == seen) break;
          seen = got;
        }
      }
    });
  }
  for (auto& t : ts) t.join();
  EXPECT_EQ(as_word(node.read(0, 8)), std::uint64_t{kThreads} * kEach);
}

TEST(MemoryNode, ConcurrentFaa) {
  MemoryNode node(opts(4096));
  node.write(8, word_bytes(100));
  constexpr int kThreads = 4;
  constexpr int kEach = 20000;
  std::vector<std::thread> ts;
  for (int i = 0; i < kThreads; ++i) {
    ts.emplace_back([&] {
      for (int j = 0; j < kEach; ++j) node.faa(8, 1);
    });
  }
  for (auto& t : ts) t.join();
  EXPECT_EQ(as_word(node.read(8, 8)), 100u + kThreads * kEach);
}

TEST(MemoryNode, ConcurrentWordWritesNeverTear) {
  MemoryNode node(opts(4096));
  const std::uint64_t a = 0x1111111111111111ull;
  const std::uint64_t b = 0x2222222222222222ull;
  std::atomic<bool> stop{false};
  std::atomic<bool> torn{false};
  std::thread reader([&] {
    while (!stop) {
      const std::uint64_t v = as_word(node.read(0, 8));
      if (v != 0 && v != a && v != b) torn = true;
    }
  });
  std::thread wa([&] {
    for (int i = 0; i < 20000; ++i) node.write(0, word_bytes(a));
  });
  std::thread wb([&] {
    for (int i = 0; i < 20000; ++i) node.write(0, word_bytes(b));
  });
  wa.join();
  wb.join();
  stop = true;
  reader.join();
  EXPECT_FALSE(torn);
  const std::uint64_t last = as_word(node.read(0, 8));
  EXPECT_TRUE(last == a || last == b);
}

TEST(Controller, AllocRoundsToBlocks) {
  MemoryNode node(opts(8192, 1024));
  const auto a = node.alloc(100);
  const auto b = node.alloc(1);
  EXPECT_EQ(a % kBlockBytes, 0u);
  EXPECT_EQ(b - a, 128u);  // first fit: 100 bytes took two blocks
  const auto live = node.controller().live_allocations();
  ASSERT_EQ(live.size(), 2u);
  EXPECT_EQ(live[0].bytes, 128u);
}

TEST(Controller, ExhaustionAndErrors) {
  MemoryNode node(opts(1024 + 256, 1024));
  for (int i = 0; i < 4; ++i) node.alloc(64);
  expect_code(ErrorCode::kOutOfMemory, [&] { node.alloc(64); });
  expect_code(ErrorCode::kInvalidArgument, [&] { node.alloc(0); });
  const auto x = node.controller().live_allocations().front().addr;
  node.free(x);
  EXPECT_EQ(node.alloc(64), x);
  node.free(x);
  expect_code(ErrorCode::kDoubleFree, [&] { node.free(x); });
  expect_code(ErrorCode::kUnknownAddr, [&] { node.free(1024 + 8); });
  expect_code(ErrorCode::kUnknownAddr, [&] { node.free(0); });
}

// Random alloc/free interleaving checked against a byte-ownership map.
TEST(Controller, ModelCheckAgainstShadow) {
  const std::uint64_t base = 1024;
  const std::uint64_t cap = base + 64 * 200;
  MemoryNode node(opts(cap, base));
  std::mt19937_64 rng(3);
  std::map<std::uint64_t, std::uint64_t> shadow;  // addr -> bytes
  std::uint64_t used = 0;
  for (int step = 0; step < 20000; ++step) {
    if (shadow.empty() || rng() % 2 == 0) {
      const std::uint64_t size = 1 + rng() % 400;
      const std::uint64_t rounded = (size + 63) / 64 * 64;
      try {
        const std::uint64_t a = node.alloc(size);
        ASSERT_GE(a, base);
        ASSERT_LE(a + rounded, cap);
        auto next = shadow.lower_bound(a);
        if (next != shadow.end()) ASSERT_LE(a + rounded, next->first);
        if (next != shadow.begin()) {
          auto prev = std::prev(next);
          ASSERT_LE(prev->first + prev->second, a);
        }
        shadow[a] = rounded;
        used += rounded;
      } catch (const Error& e) {
        ASSERT_EQ(e.code(), ErrorCode::kOutOfMemory);
        ASSERT_GT(used + rounded, 0u);
      }
    } else {
      auto it = shadow.begin();
      std::advance(it, rng() % shadow.size());
      node.free(it->first);
      used -= it->second;
      shadow.erase(it);
    }
    ASSERT_EQ(node.controller().free_bytes(), cap - base - used);
  }
}

TEST(Controller, ApplyPenalties) {
  MemoryNode node(opts(1024, 0, 2));
  auto w = node.rpc_apply_penalties(std::vector<double>{0.0, 0.0});
  EXPECT_DOUBLE_EQ(w[0], 0.5);
  EXPECT_DOUBLE_EQ(w[1], 0.5);
  w = node.rpc_apply_penalties(std::vector<double>{0.1, 0.0});
  // Independent evaluation of 0.5 e^-0.1 / (0.5 e^-0.1 + 0.5).
  const double a = 0.5 * std::exp(-0.1);
  EXPECT_NEAR(a, 0.45242, 5e-6);
  EXPECT_NEAR(w[0], a / (a + 0.5), 1e-15);
  EXPECT_NEAR(w[0], 0.47502, 5e-6);
  EXPECT_NEAR(w[1], 0.52498, 5e-6);
  expect_code(ErrorCode::kDimensionMismatch, [&] { node.rpc_apply_penalties(std::vector<double>{0.1}); });
  expect_code(ErrorCode::kInvalidArgument,
              [&] { node.rpc_apply_penalties(std::vector<double>{std::nan(""), 0.0}); });
}

TEST(Controller, HugePenaltiesKeepWeightsFinite) {
  MemoryNode node(opts(1024, 0, 2));
  const auto w = node.rpc_apply_penalties(std::vector<double>{5000.0, 0.0});
  EXPECT_TRUE(std::isfinite(w[0]));
  EXPECT_NEAR(w[0] + w[1], 1.0, 1e-12);
  EXPECT_GT(w[1], 0.999);
}

TEST(Transport, CountsClientSide) {
  MemoryNode node(opts(4096, 1024));
  InProcTransport t(node);
  t.write_word(0, 3);
  EXPECT_EQ(t.read_word(0), 3u);
  t.cas(0, 3, 4);
  t.faa(0, 1);
  t.free(t.alloc(64));
  t.rpc_apply_penalties(std::vector<double>{0.0, 0.0});
  const VerbStats s = t.stats();
  EXPECT_EQ(s, node.stats());
  EXPECT_EQ(s.total_verbs(), 7u);
}

TEST(Transport, OverwriteTracking) {
  MemoryNode node(opts(4096));
  node.track_overwrites(0, 40, 24, 10);
  node.write(24, word_bytes(5));
  node.write(24, word_bytes(9));
  node.write(64, word_bytes(100));  // 40 + 24: tracked
  node.write(8, word_bytes(77));    // not tracked
  EXPECT_EQ(node.overwritten_sum(), 5u);
}

}  // namespace
}  // namespace dmcache
