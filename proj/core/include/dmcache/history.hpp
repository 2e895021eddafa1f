#pragma once

#include <cstdint>

#include "dmcache/slot.hpp"

namespace dmcache {

// Logical FIFO over a circular counter of `bits` bits. The counter is the
// queue tail; an entry's history ID is its position. No queue is stored.

constexpr std::uint64_t history_modulus(unsigned bits = kHistoryIdBits) { return std::uint64_t{1} << bits; }
constexpr std::uint64_t history_mask(unsigned bits = kHistoryIdBits) { return history_modulus(bits) - 1; }

/// Reserved ID marking a slot freed without a history record (single-expert
/// eviction, duplicate removal). Never valid; the counter skips it.
constexpr std::uint64_t tombstone_id(unsigned bits = kHistoryIdBits) { return history_mask(bits); }

/// Distance from an entry to the counter, in [1, 2^bits]. With counter v1 and
/// ID v2: v1 - v2 when v1 > v2, otherwise v1 + 2^bits - v2.
constexpr std::uint64_t history_age(std::uint64_t counter, std::uint64_t id, unsigned bits = kHistoryIdBits) {
  const std::uint64_t v1 = counter & history_mask(bits);
  const std::uint64_t v2 = id & history_mask(bits);
  return v1 > v2 ? v1 - v2 : v1 + history_modulus(bits) - v2;
}

/// True while the entry is among the last `length` IDs handed out.
constexpr bool history_valid(std::uint64_t id, std::uint64_t counter, std::uint64_t length,
                             unsigned bits = kHistoryIdBits) {
  if ((id & history_mask(bits)) == tombstone_id(bits)) return false;
  return history_age(counter, id, bits) <= length;
}

/// Validity judged against a possibly stale local copy of the counter. IDs
/// more than half the ring ahead of `cached_counter` were handed out after the
/// copy was taken and count as valid.
constexpr bool history_valid_cached(std::uint64_t id, std::uint64_t cached_counter, std::uint64_t length,
                                    unsigned bits = kHistoryIdBits) {
  if ((id & history_mask(bits)) == tombstone_id(bits)) return false;
  const std::uint64_t age = history_age(cached_counter, id, bits);
  return age > history_modulus(bits) / 2 || age <= length;
}

/// Zero-based position in the FIFO: 0 is the most recent eviction.
constexpr std::uint64_t history_position(std::uint64_t counter, std::uint64_t id, unsigned bits = kHistoryIdBits) {
  return history_age(counter, id, bits) - 1;
}

/// d = 0.005^(1/N) for a cache of N objects.
double discount_rate(std::uint64_t cache_objects);

/// lambda * d^position; the multiplicative weight update is exp(-penalty).
double regret_penalty(double lambda, double discount, std::uint64_t position);

}  // namespace dmcache
