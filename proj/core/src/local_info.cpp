#include "dmcache/local_info.hpp"

#include <bit>

namespace dmcache {

unsigned LocalInfo::size_class(std::uint64_t size_bytes) {
  const std::uint64_t blocks = size_bytes == 0 ? 1 : (size_bytes + 63) / 64;
  return static_cast<unsigned>(std::bit_width(blocks - 1));
}

void LocalInfo::observe(std::uint64_t size_bytes, double latency, double cost) {
  LocalEstimate& e = classes_[size_class(size_bytes)];
  e.latency += alpha_ * (latency - e.latency);
  e.cost += alpha_ * (cost - e.cost);
}

LocalEstimate LocalInfo::estimate(std::uint64_t size_bytes) const {
  auto it = classes_.find(size_class(size_bytes));
  return it == classes_.end() ? LocalEstimate{} : it->second;
}

}  // namespace dmcache
