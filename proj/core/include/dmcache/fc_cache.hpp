#pragma once

#include <cstdint>
#include <list>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace dmcache {

inline constexpr std::uint64_t kDefaultFcThreshold = 10;
inline constexpr std::uint64_t kDefaultFcCapacityBytes = 10ull << 20;

/// A buffered frequency increment that must now be applied with one FAA.
struct FcFlush {
  std::uint64_t slot_addr = 0;
  std::uint64_t delta = 0;
  friend bool operator==(const FcFlush&, const FcFlush&) = default;
};

struct FcRecordResult {
  std::vector<FcFlush> flushes;
  std::optional<std::uint64_t> own_delta;  // set when the recorded key itself was flushed
};

/// Client-local write-combining buffer for frequency counters. Pure
/// bookkeeping: callers issue the FAAs for the flushes it returns.
class FcCache {
 public:
  /// Book-keeping bytes charged per entry on top of the key.
  static constexpr std::uint64_t kEntryOverhead = 24;

  explicit FcCache(std::uint64_t threshold = kDefaultFcThreshold,
                   std::uint64_t capacity_bytes = kDefaultFcCapacityBytes);

  /// One access to `key` stored at `slot_addr`. Returns the FAAs to issue:
  /// the entry itself once its delta exceeds the threshold, a stale entry
  /// for the same key at another slot, and entries pushed out by capacity.
  FcRecordResult record(std::string_view key, std::uint64_t slot_addr);

  /// Drops every entry and returns them as flushes.
  std::vector<FcFlush> drain();

  /// Pending delta for a key or a slot (0 when absent).
  std::uint64_t pending(std::string_view key) const;
  std::uint64_t pending_for_slot(std::uint64_t slot_addr) const;

  std::size_t size() const { return entries_.size(); }
  std::uint64_t bytes() const { return bytes_; }
  std::uint64_t threshold() const { return threshold_; }
  std::uint64_t capacity_bytes() const { return capacity_; }

 private:
  struct Entry {
    std::uint64_t slot_addr = 0;
    std::uint64_t delta = 0;
    std::list<std::string>::iterator order;
  };
  FcFlush remove(std::unordered_map<std::string, Entry>::iterator it);

  std::uint64_t threshold_;
  std::uint64_t capacity_;
  std::uint64_t bytes_ = 0;
  std::unordered_map<std::string, Entry> entries_;
  std::unordered_map<std::uint64_t, std::uint64_t> by_slot_;
  std::list<std::string> insert_order_;  // oldest insert at the front
};

}  // namespace dmcache
