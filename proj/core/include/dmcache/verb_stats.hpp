#pragma once

#include <atomic>
#include <cstdint>

namespace dmcache {

/// Plain snapshot of verb tallies.
struct VerbStats {
  std::uint64_t reads = 0;
  std::uint64_t writes = 0;
  std::uint64_t cas = 0;
  std::uint64_t faa = 0;
  std::uint64_t allocs = 0;
  std::uint64_t frees = 0;
  std::uint64_t rpcs = 0;
  std::uint64_t bytes_read = 0;
  std::uint64_t bytes_written = 0;

  /// One-sided and controller verbs, excluding byte totals.
  std::uint64_t total_verbs() const { return reads + writes + cas + faa + allocs + frees + rpcs; }

  VerbStats& operator+=(const VerbStats& o);
  friend VerbStats operator+(VerbStats a, const VerbStats& b) { return a += b; }
  friend VerbStats operator-(const VerbStats& a, const VerbStats& b);
  friend bool operator==(const VerbStats&, const VerbStats&) = default;
};

/// Lock-free counters; snapshot() may run while other threads keep counting.
class VerbCounters {
 public:
  void on_read(std::uint64_t bytes) {
    reads_.fetch_add(1, std::memory_order_relaxed);
    bytes_read_.fetch_add(bytes, std::memory_order_relaxed);
  }
  void on_write(std::uint64_t bytes) {
    writes_.fetch_add(1, std::memory_order_relaxed);
    bytes_written_.fetch_add(bytes, std::memory_order_relaxed);
  }
  void on_cas() { cas_.fetch_add(1, std::memory_order_relaxed); }
  void on_faa() { faa_.fetch_add(1, std::memory_order_relaxed); }
  void on_alloc() { allocs_.fetch_add(1, std::memory_order_relaxed); }
  void on_free() { frees_.fetch_add(1, std::memory_order_relaxed); }
  void on_rpc() { rpcs_.fetch_add(1, std::memory_order_relaxed); }

  VerbStats snapshot() const;

 private:
  std::atomic<std::uint64_t> reads_{0};
  std::atomic<std::uint64_t> writes_{0};
  std::atomic<std::uint64_t> cas_{0};
  std::atomic<std::uint64_t> faa_{0};
  std::atomic<std::uint64_t> allocs_{0};
  std::atomic<std::uint64_t> frees_{0};
  std::atomic<std::uint64_t> rpcs_{0};
  std::atomic<std::uint64_t> bytes_read_{0};
  std::atomic<std::uint64_t> bytes_written_{0};
};

}  // namespace dmcache
