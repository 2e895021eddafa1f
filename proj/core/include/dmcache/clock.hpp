#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>

namespace dmcache {

/// Timestamp source for access metadata. Must be safe to call from any
/// client thread and never go backwards for a single caller.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual std::uint64_t now() = 0;
};

/// Shared tick counter: every call returns a fresh, strictly larger value.
/// Makes single-threaded runs reproducible.
class LogicalClock final : public Clock {
 public:
  explicit LogicalClock(std::uint64_t start = 1) : next_(start) {}
  std::uint64_t now() override { return next_.fetch_add(1, std::memory_order_relaxed); }

 private:
  std::atomic<std::uint64_t> next_;
};

/// Microseconds since construction, from a monotonic clock.
class WallClock final : public Clock {
 public:
  WallClock() : epoch_(std::chrono::steady_clock::now()) {}
  std::uint64_t now() override {
    return 1 + static_cast<std::uint64_t>(
                   std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now() - epoch_)
                       .count());
  }

 private:
  std::chrono::steady_clock::time_point epoch_;
};

}  // namespace dmcache
