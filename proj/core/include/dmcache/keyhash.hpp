#pragma once

#include <cstdint>
#include <string_view>

namespace dmcache {

inline constexpr std::uint64_t kDefaultHashSeed = 0x9E3779B97F4A7C15ull;

/// Seedable 64-bit key hash (FNV-1a over the bytes, then a murmur3 finalizer).
/// Stable across runs and platforms; the fingerprint is its top byte.
std::uint64_t keyhash(std::string_view key, std::uint64_t seed = kDefaultHashSeed);

inline std::uint8_t fingerprint(std::uint64_t hash) { return static_cast<std::uint8_t>(hash >> 56); }

}  // namespace dmcache
