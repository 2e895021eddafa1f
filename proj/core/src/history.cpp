#include "dmcache/history.hpp"

#include <cmath>

namespace dmcache {

double discount_rate(std::uint64_t cache_objects) {
  return std::pow(0.005, 1.0 / static_cast<double>(cache_objects == 0 ? 1 : cache_objects));
}

double regret_penalty(double lambda, double discount, std::uint64_t position) {
  return lambda * std::pow(discount, static_cast<double>(position));
}

}  // namespace dmcache
