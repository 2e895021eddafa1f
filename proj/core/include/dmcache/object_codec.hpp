#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace dmcache {

// Object layout in the pool (little-endian):
//   ext_meta_len:u16 | ext bytes | key_len:u16 | val_len:u32 | key | value
// padded to 64-byte blocks. Objects needing 254 blocks or more are split into
// segments of at most 254 blocks; every non-final segment ends with an 8-byte
// link: next pointer in the low 48 bits, next segment's block count above.

inline constexpr std::uint64_t kMaxSegmentBlocks = 254;
inline constexpr std::size_t kLinkBytes = 8;

struct ObjectParts {
  std::span<const std::byte> ext;
  std::string_view key;
  std::string_view value;
};

std::vector<std::byte> encode_object(std::span<const std::byte> ext, std::string_view key, std::string_view value);

/// Returns nullopt for bytes that do not hold a well-formed object (for
/// instance a block that was freed and reused under a concurrent reader).
std::optional<ObjectParts> parse_object(std::span<const std::byte> stream);

/// Bytes of a logical object stream before padding.
std::uint64_t object_stream_bytes(std::size_t ext_len, std::size_t key_len, std::size_t value_len);

/// Block counts of the segments a stream of `stream_bytes` is stored in.
std::vector<std::uint64_t> plan_segments(std::uint64_t stream_bytes);

/// Payload bytes a segment of `blocks` blocks carries (excludes its link).
std::uint64_t segment_payload_bytes(std::uint64_t blocks, bool has_link);

std::uint64_t encode_link(std::uint64_t next_addr, std::uint64_t next_blocks);
void decode_link(std::uint64_t link, std::uint64_t& next_addr, std::uint64_t& next_blocks);

}  // namespace dmcache
