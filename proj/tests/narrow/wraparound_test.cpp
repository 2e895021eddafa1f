#include <gtest/gtest.h>

#include "dmcache/history.hpp"
#include "dmcache/runner.hpp"
#include "dmcache/workload.hpp"
#include "rig.hpp"

namespace dmcache {
namespace {

static_assert(kHistoryIdBits == 16);

TEST(Narrow, ValidityAcrossTheSeam) {
  // Counter has wrapped to 3; IDs 65534 (age 5) and 2 (age 1) are recent.
  EXPECT_EQ(history_age(3, 65534), 5u);
  EXPECT_TRUE(history_valid(65534, 3, 10));
  EXPECT_TRUE(history_valid(2, 3, 10));
  EXPECT_FALSE(history_valid(65530, 3, 5));
  EXPECT_FALSE(history_valid(tombstone_id(), 3, 100));
  EXPECT_EQ(history_position(3, 2), 0u);
}

TEST(Narrow, CounterSkipsTombstone) {
  testing::Rig::Params p;
  p.num_buckets = 1;
  p.slots_per_bucket = 4;
  p.heap_objects = 4;
  p.client.sample_k = 4;
  p.client.sample_until_k_live = false;
  testing::Rig rig(p);
  auto& c = rig.add_client();
  rig.raw().write_word(rig.layout.counter_addr, tombstone_id() - 1);
  c.set("a", "v");
  ASSERT_TRUE(c.evict_one());
  c.set("b", "v");
  ASSERT_TRUE(c.evict_one());
  const auto slots = c.table().read_table(rig.raw());
  std::vector<std::uint64_t> ids;
  for (const Slot& s : slots) {
    if (s.atomic.history()) ids.push_back(s.atomic.pointer);
  }
  std::sort(ids.begin(), ids.end());
  EXPECT_EQ(ids, (std::vector<std::uint64_t>{0, tombstone_id() - 1}));
  EXPECT_EQ(c.stats().history_faas, 3u);
}

// Long adaptive run: the counter wraps several times and the pool stays sound.
TEST(Narrow, AdaptiveRunWrapsAndAudits) {
  testing::Rig::Params p;
  p.heap_objects = 64;
  p.object_blocks = 5;
  p.num_buckets = 32;
  testing::Rig rig(p);
  CacheClient* c = &rig.add_client();
  WorkloadSpec w;
  w.distribution = Distribution::kUniform;
  w.num_keys = 200;
  w.ops = 300000;
  const RunMetrics m = run_workload(w, std::span(&c, 1), {});
  EXPECT_GT(rig.raw().read_word(rig.layout.counter_addr), 2 * history_modulus());
  EXPECT_GT(m.client.regrets, 0u);
  AuditExpectations e;
  e.node_stats = rig.node->stats();
  e.client_stats = c->transport().stats() + rig.raw().stats();  // the probe READ above counts too
  e.accesses = c->stats().accesses;
  e.history_faas = c->stats().history_faas;
  e.fc_flushes = c->stats().fc_flushes;
  e.num_experts = 2;
  const AuditReport r = audit_pool(*rig.node, rig.layout, kDefaultHashSeed, e);
  EXPECT_TRUE(r.passed()) << r.to_text();
}

}  // namespace
}  // namespace dmcache
