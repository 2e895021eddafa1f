#include "dmcache/slot.hpp"

#include <cstring>

namespace dmcache {

namespace {

void put_u64(std::byte* dst, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) dst[i] = std::byte(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_u64(const std::byte* src) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t(std::to_integer<std::uint8_t>(src[i])) << (8 * i);
  return v;
}

}  // namespace

std::array<std::byte, kSlotMetadataBytes> encode_metadata(const SlotMetadata& meta) {
  std::array<std::byte, kSlotMetadataBytes> out{};
  put_u64(out.data() + 0, meta.insert_ts);
  put_u64(out.data() + 8, meta.last_ts);
  put_u64(out.data() + 16, meta.freq);
  put_u64(out.data() + 24, meta.hash);
  return out;
}

std::array<std::byte, kSlotBytes> encode_slot(const SlotAtomic& atomic, const SlotMetadata& meta) {
  std::array<std::byte, kSlotBytes> out{};
  put_u64(out.data(), encode_atomic(atomic));
  const auto m = encode_metadata(meta);
  std::memcpy(out.data() + kInsertTsOffset, m.data(), m.size());
  return out;
}

Slot decode_slot(std::uint64_t addr, std::span<const std::byte> bytes) {
  Slot s;
  s.addr = addr;
  s.word = get_u64(bytes.data());
  s.atomic = decode_atomic(s.word);
  s.meta.insert_ts = get_u64(bytes.data() + kInsertTsOffset);
  s.meta.last_ts = get_u64(bytes.data() + kLastTsOffset);
  s.meta.freq = get_u64(bytes.data() + kFreqOffset);
  s.meta.hash = get_u64(bytes.data() + kHashOffset);
  return s;
}

std::uint8_t size_field_for_blocks(std::uint64_t blocks) {
  return blocks >= kChainedSize ? kChainedSize : static_cast<std::uint8_t>(blocks);
}

}  // namespace dmcache
