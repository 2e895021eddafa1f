#include <benchmark/benchmark.h>

#include <random>
#include <string>

#include "dmcache/history.hpp"
#include "dmcache/slot.hpp"
#include "dmcache/workload.hpp"
#include "dmcache/zipf.hpp"
#include "rig.hpp"

namespace {

using dmcache::testing::Rig;

std::vector<std::string> keys(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(dmcache::make_key(i, 16));
  return out;
}

void BM_GetHit(benchmark::State& state) {
  Rig::Params p;
  p.heap_objects = 1024;
  p.num_buckets = 512;
  p.object_blocks = 5;
  Rig rig(p);
  auto& c = rig.add_client();
  const auto ks = keys(512);
  for (const auto& k : ks) c.set(k, std::string(240, 'v'));
  std::size_t i = 0;
  const auto before = c.transport().stats();
  for (auto _ : state) benchmark::DoNotOptimize(c.get(ks[i++ % ks.size()]));
  state.counters["verbs/op"] = benchmark::Counter(double((c.transport().stats() - before).total_verbs()),
                                                  benchmark::Counter::kAvgIterations);
}
BENCHMARK(BM_GetHit);

// Every SET of a new key past capacity triggers one eviction.
void BM_SetWithEviction(benchmark::State& state) {
  Rig::Params p;
  p.heap_objects = 1000;
  p.num_buckets = 512;
  p.object_blocks = 5;
  p.client.adaptive = state.range(0) != 0;
  if (!p.client.adaptive) p.experts = {"LRU"};
  Rig rig(p);
  auto& c = rig.add_client();
  std::uint64_t id = 0;
  const std::string value(240, 'v');
  for (; id < 1000; ++id) c.set(dmcache::make_key(id, 16), value);
  for (auto _ : state) c.set(dmcache::make_key(id++, 16), value);
  state.SetLabel(p.client.adaptive ? "adaptive" : "lru-only");
}
BENCHMARK(BM_SetWithEviction)->Arg(0)->Arg(1);

void BM_ZipfNext(benchmark::State& state) {
  dmcache::ZipfGenerator z(static_cast<std::uint64_t>(state.range(0)), 0.99);
  std::mt19937_64 rng(1);
  for (auto _ : state) benchmark::DoNotOptimize(z.next(rng));
}
BENCHMARK(BM_ZipfNext)->Arg(10000)->Arg(1000000);

void BM_SlotCodec(benchmark::State& state) {
  dmcache::SlotAtomic a{0xAB, 3, 0x123456789A40};
  dmcache::SlotMetadata m{1, 2, 3, 4};
  for (auto _ : state) {
    const auto bytes = dmcache::encode_slot(a, m);
    benchmark::DoNotOptimize(dmcache::decode_slot(64, bytes));
  }
}
BENCHMARK(BM_SlotCodec);

void BM_HistoryValid(benchmark::State& state) {
  std::mt19937_64 rng(2);
  std::uint64_t id = 0;
  for (auto _ : state) {
    id += rng() & 0xFFFF;
    benchmark::DoNotOptimize(dmcache::history_valid(id, 1u << 20, 1000));
  }
}
BENCHMARK(BM_HistoryValid);

}  // namespace

BENCHMARK_MAIN();
