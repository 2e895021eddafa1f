#include "dmcache/verb_stats.hpp"

namespace dmcache {

VerbStats& VerbStats::operator+=(const VerbStats& o) {
  reads += o.reads;
  writes += o.writes;
  cas += o.cas;
  faa += o.faa;
  allocs += o.allocs;
  frees += o.frees;
  rpcs += o.rpcs;
  bytes_read += o.bytes_read;
  bytes_written += o.bytes_written;
  return *this;
}

VerbStats operator-(const VerbStats& a, const VerbStats& b) {
  VerbStats d;
  d.reads = a.reads - b.reads;
  d.writes = a.writes - b.writes;
  d.cas = a.cas - b.cas;
  d.faa = a.faa - b.faa;
  d.allocs = a.allocs - b.allocs;
  d.frees = a.frees - b.frees;
  d.rpcs = a.rpcs - b.rpcs;
  d.bytes_read = a.bytes_read - b.bytes_read;
  d.bytes_written = a.bytes_written - b.bytes_written;
  return d;
}

VerbStats VerbCounters::snapshot() const {
  VerbStats s;
  s.reads = reads_.load(std::memory_order_relaxed);
  s.writes = writes_.load(std::memory_order_relaxed);
  s.cas = cas_.load(std::memory_order_relaxed);
  s.faa = faa_.load(std::memory_order_relaxed);
  s.allocs = allocs_.load(std::memory_order_relaxed);
  s.frees = frees_.load(std::memory_order_relaxed);
  s.rpcs = rpcs_.load(std::memory_order_relaxed);
  s.bytes_read = bytes_read_.load(std::memory_order_relaxed);
  s.bytes_written = bytes_written_.load(std::memory_order_relaxed);
  return s;
}

}  // namespace dmcache
