#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <span>
#include <unordered_map>
#include <vector>

#include "dmcache/verb_stats.hpp"

namespace dmcache {

inline constexpr std::uint64_t kBlockBytes = 64;

struct Allocation {
  std::uint64_t addr = 0;
  std::uint64_t bytes = 0;
};

/// Weak-CPU side of the memory node: block allocator plus the global expert
/// weights. Everything here runs under one mutex.
class Controller {
 public:
  Controller(std::uint64_t heap_base, std::uint64_t heap_end, std::size_t num_experts);

  /// First-fit over a coalescing free list of 64-byte blocks.
  std::uint64_t alloc(std::uint64_t size);
  void free(std::uint64_t addr);

  /// Multiplies weight i by exp(-sums[i]) and renormalizes to sum 1.
  std::vector<double> apply_penalties(std::span<const double> sums);

  std::vector<double> weights() const;
  std::vector<Allocation> live_allocations() const;
  std::uint64_t heap_base() const { return heap_base_; }
  std::uint64_t heap_end() const { return heap_end_; }
  std::uint64_t free_bytes() const;

 private:
  mutable std::mutex mu_;
  std::uint64_t heap_base_;
  std::uint64_t heap_end_;
  std::map<std::uint64_t, std::uint64_t> free_extents_;  // start -> bytes
  std::unordered_map<std::uint64_t, std::uint64_t> live_;
  std::set<std::uint64_t> freed_starts_;
  std::uint64_t free_bytes_ = 0;
  std::vector<double> weights_;
};

/// A byte-addressable memory node. Aligned 8-byte words are the unit of
/// atomicity: reads never observe a torn word, CAS and FAA are linearizable.
class MemoryNode {
 public:
  struct Options {
    std::uint64_t capacity = 0;   // total bytes, multiple of 64
    std::uint64_t heap_base = 0;  // allocator manages [heap_base, capacity)
    std::size_t num_experts = 1;
    std::uint32_t verb_delay_us = 0;
  };

  explicit MemoryNode(const Options& opts);

  MemoryNode(const MemoryNode&) = delete;
  MemoryNode& operator=(const MemoryNode&) = delete;

  void read(std::uint64_t addr, std::span<std::byte> out);
  std::vector<std::byte> read(std::uint64_t addr, std::uint32_t len);
  void write(std::uint64_t addr, std::span<const std::byte> data);
  std::uint64_t cas(std::uint64_t addr, std::uint64_t expected, std::uint64_t desired);
  std::uint64_t faa(std::uint64_t addr, std::uint64_t delta);
  std::uint64_t alloc(std::uint64_t size);
  void free(std::uint64_t addr);
  std::vector<double> rpc_apply_penalties(std::span<const double> penalty_sums);

  std::uint64_t capacity() const { return capacity_; }
  VerbStats stats() const { return counters_.snapshot(); }
  Controller& controller() { return controller_; }
  const Controller& controller() const { return controller_; }

  /// Audit instrumentation: whenever a WRITE overwrites one of the words
  /// base + i*stride + offset (i < count), the overwritten value is added to
  /// overwritten_sum(). Used to account for frequency counters destroyed by
  /// slot reuse. Must be enabled before clients start.
  void track_overwrites(std::uint64_t base, std::uint64_t stride, std::uint64_t offset,
                        std::uint64_t count);
  std::uint64_t overwritten_sum() const { return overwritten_sum_.load(); }

 private:
  void check_range(std::uint64_t addr, std::uint64_t len) const;
  std::atomic<std::uint64_t>& word_at(std::uint64_t addr);
  void check_word(std::uint64_t addr) const;
  bool tracked(std::uint64_t word_addr) const;
  void inject_delay() const;

  std::uint64_t capacity_;
  std::unique_ptr<std::atomic<std::uint64_t>[]> words_;
  Controller controller_;
  VerbCounters counters_;
  std::uint32_t verb_delay_us_;

  std::uint64_t track_base_ = 0;
  std::uint64_t track_stride_ = 0;
  std::uint64_t track_offset_ = 0;
  std::uint64_t track_count_ = 0;
  std::atomic<std::uint64_t> overwritten_sum_{0};
};

}  // namespace dmcache
