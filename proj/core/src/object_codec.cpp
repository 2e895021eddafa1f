#include "dmcache/object_codec.hpp"

#include <cstring>

#include "dmcache/errors.hpp"
#include "dmcache/memory_node.hpp"
#include "dmcache/slot.hpp"

namespace dmcache {

namespace {

void put(std::vector<std::byte>& out, std::uint64_t v, int n) {
  for (int i = 0; i < n; ++i) out.push_back(std::byte(static_cast<std::uint8_t>(v >> (8 * i))));
}

std::uint64_t get(std::span<const std::byte> in, std::size_t pos, int n) {
  std::uint64_t v = 0;
  for (int i = 0; i < n; ++i) v |= std::uint64_t(std::to_integer<std::uint8_t>(in[pos + i])) << (8 * i);
  return v;
}

}  // namespace

std::uint64_t object_stream_bytes(std::size_t ext_len, std::size_t key_len, std::size_t value_len) {
  return 2 + ext_len + 2 + 4 + key_len + value_len;
}

std::vector<std::byte> encode_object(std::span<const std::byte> ext, std::string_view key, std::string_view value) {
  if (ext.size() > UINT16_MAX || key.size() > UINT16_MAX || value.size() > UINT32_MAX) {
    throw Error(ErrorCode::kValueTooLarge, "object field exceeds its length prefix");
  }
  std::vector<std::byte> out;
  out.reserve(object_stream_bytes(ext.size(), key.size(), value.size()));
  put(out, ext.size(), 2);
  out.insert(out.end(), ext.begin(), ext.end());
  put(out, key.size(), 2);
  put(out, value.size(), 4);
  const auto* k = reinterpret_cast<const std::byte*>(key.data());
  const auto* v = reinterpret_cast<const std::byte*>(value.data());
  out.insert(out.end(), k, k + key.size());
  out.insert(out.end(), v, v + value.size());
  return out;
}

std::optional<ObjectParts> parse_object(std::span<const std::byte> stream) {
  if (stream.size() < 2) return std::nullopt;
  const std::size_t ext_len = get(stream, 0, 2);
  if (stream.size() < 2 + ext_len + 6) return std::nullopt;
  const std::size_t key_len = get(stream, 2 + ext_len, 2);
  const std::size_t val_len = get(stream, 4 + ext_len, 4);
  const std::size_t body = 8 + ext_len;
  if (stream.size() < body + key_len + val_len) return std::nullopt;
  ObjectParts parts;
  parts.ext = stream.subspan(2, ext_len);
  parts.key = std::string_view(reinterpret_cast<const char*>(stream.data() + body), key_len);
  parts.value = std::string_view(reinterpret_cast<const char*>(stream.data() + body + key_len), val_len);
  return parts;
}

std::uint64_t segment_payload_bytes(std::uint64_t blocks, bool has_link) {
  return blocks * kBlockBytes - (has_link ? kLinkBytes : 0);
}

std::vector<std::uint64_t> plan_segments(std::uint64_t stream_bytes) {
  std::vector<std::uint64_t> segments;
  std::uint64_t remaining = stream_bytes;
  const std::uint64_t full = segment_payload_bytes(kMaxSegmentBlocks, true);
  while (true) {
    const std::uint64_t blocks = (remaining + kBlockBytes - 1) / kBlockBytes;
    if (blocks < kChainedSize) {
      segments.push_back(blocks == 0 ? 1 : blocks);
      return segments;
    }
    segments.push_back(kMaxSegmentBlocks);
    remaining = remaining > full ? remaining - full : 0;
  }
}

std::uint64_t encode_link(std::uint64_t next_addr, std::uint64_t next_blocks) {
  return (next_addr & kPointerMask) | (next_blocks << 48);
}

void decode_link(std::uint64_t link, std::uint64_t& next_addr, std::uint64_t& next_blocks) {
  next_addr = link & kPointerMask;
  next_blocks = link >> 48;
}

}  // namespace dmcache
