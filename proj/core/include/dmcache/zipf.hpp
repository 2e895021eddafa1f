#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace dmcache {

/// Draws ranks in [0, n) with P(i) proportional to 1/(i+1)^theta, theta in
/// (0, 1]. Inverts a precomputed CDF, so every draw costs one uniform
/// variate and a binary search.
class ZipfGenerator {
 public:
  ZipfGenerator(std::uint64_t n, double theta);

  std::uint64_t next(std::mt19937_64& rng) const;
  double probability(std::uint64_t rank) const;
  std::uint64_t size() const { return cdf_.size(); }
  double theta() const { return theta_; }

 private:
  double theta_;
  std::vector<double> cdf_;
};

}  // namespace dmcache
