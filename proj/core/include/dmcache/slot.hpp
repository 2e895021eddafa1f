#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>

#ifndef DMCACHE_HISTORY_ID_BITS
#define DMCACHE_HISTORY_ID_BITS 48
#endif

namespace dmcache {

inline constexpr std::size_t kSlotBytes = 40;
inline constexpr std::size_t kSlotMetadataBytes = 32;

// Byte offsets inside a slot.
inline constexpr std::size_t kAtomicOffset = 0;
inline constexpr std::size_t kInsertTsOffset = 8;
inline constexpr std::size_t kLastTsOffset = 16;
inline constexpr std::size_t kFreqOffset = 24;
inline constexpr std::size_t kHashOffset = 32;

inline constexpr std::uint8_t kEmptySize = 0x00;
inline constexpr std::uint8_t kChainedSize = 0xFE;  // first segment of a chained object
inline constexpr std::uint8_t kHistorySize = 0xFF;
inline constexpr std::uint64_t kPointerMask = (std::uint64_t{1} << 48) - 1;

inline constexpr unsigned kHistoryIdBits = DMCACHE_HISTORY_ID_BITS;
static_assert(kHistoryIdBits >= 8 && kHistoryIdBits <= 48);

/// The 8-byte atomic word: fp in the top byte, size next, 48-bit pointer (or
/// history ID) in the low bits.
struct SlotAtomic {
  std::uint8_t fp = 0;
  std::uint8_t size = 0;  // 64-byte blocks; 0 empty, 0xFE chained, 0xFF history
  std::uint64_t pointer = 0;

  bool empty() const { return size == kEmptySize; }
  bool history() const { return size == kHistorySize; }
  bool live() const { return size != kEmptySize && size != kHistorySize; }

  friend bool operator==(const SlotAtomic&, const SlotAtomic&) = default;
};

constexpr std::uint64_t encode_atomic(const SlotAtomic& s) {
  return (std::uint64_t{s.fp} << 56) | (std::uint64_t{s.size} << 48) | (s.pointer & kPointerMask);
}

constexpr SlotAtomic decode_atomic(std::uint64_t word) {
  return SlotAtomic{static_cast<std::uint8_t>(word >> 56), static_cast<std::uint8_t>(word >> 48),
                    word & kPointerMask};
}

/// The 32 bytes of inline access metadata following the atomic word.
/// insert_ts doubles as the expert bitmap in history entries.
struct SlotMetadata {
  std::uint64_t insert_ts = 0;
  std::uint64_t last_ts = 0;
  std::uint64_t freq = 0;
  std::uint64_t hash = 0;

  friend bool operator==(const SlotMetadata&, const SlotMetadata&) = default;
};

/// History bitmap word: marker | low 16 bits of the history ID | bitmap.
/// A metadata WRITE from a client still holding the pre-eviction word can land
/// after the evictor's bitmap WRITE; the marker and ID expose that.
constexpr std::uint64_t kBitmapMarker = 0xB17Eull << 48;
constexpr std::uint64_t encode_history_bitmap(std::uint64_t history_id, std::uint32_t bmap) {
  return kBitmapMarker | ((history_id & 0xFFFF) << 32) | bmap;
}

/// A decoded slot together with where it lives.
struct Slot {
  std::uint64_t addr = 0;  // address of the atomic word
  std::uint64_t word = 0;
  SlotAtomic atomic;
  SlotMetadata meta;

  /// Live, but the installer's metadata WRITE has not landed: insert_ts still
  /// holds the virgin zero or a history/tombstone tag. Evicting such a slot
  /// would let that WRITE land on whoever installs here next.
  bool install_pending() const {
    return atomic.live() && (meta.insert_ts == 0 || meta.insert_ts >> 48 == kBitmapMarker >> 48);
  }
  bool bitmap_intact() const {
    return (meta.insert_ts & ~std::uint64_t{0xFFFFFFFF}) == (encode_history_bitmap(atomic.pointer, 0));
  }
  /// Zero when the bitmap was overwritten.
  std::uint32_t expert_bmap() const { return bitmap_intact() ? static_cast<std::uint32_t>(meta.insert_ts) : 0; }
};

std::array<std::byte, kSlotBytes> encode_slot(const SlotAtomic& atomic, const SlotMetadata& meta);
std::array<std::byte, kSlotMetadataBytes> encode_metadata(const SlotMetadata& meta);
Slot decode_slot(std::uint64_t addr, std::span<const std::byte> bytes);

/// Number of 64-byte blocks stored in the size byte for an object, or
/// kChainedSize when it needs chaining.
std::uint8_t size_field_for_blocks(std::uint64_t blocks);

}  // namespace dmcache
