#include "dmcache/zipf.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dmcache/errors.hpp"

namespace dmcache {

ZipfGenerator::ZipfGenerator(std::uint64_t n, double theta) : theta_(theta) {
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "zipf needs at least one key");
  if (!(theta > 0.0 && theta <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "zipf theta must be in (0, 1], got " + std::to_string(theta));
  }
  cdf_.resize(n);
  double acc = 0.0;
  for (std::uint64_t i = 0; i < n; ++i) cdf_[i] = acc += std::pow(double(i + 1), -theta);
  for (double& c : cdf_) c /= acc;
  cdf_.back() = 1.0;
}

std::uint64_t ZipfGenerator::next(std::mt19937_64& rng) const {
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  return static_cast<std::uint64_t>(std::upper_bound(cdf_.begin(), cdf_.end(), u) - cdf_.begin());
}

double ZipfGenerator::probability(std::uint64_t rank) const {
  if (rank >= cdf_.size()) return 0.0;
  return rank == 0 ? cdf_[0] : cdf_[rank] - cdf_[rank - 1];
}

}  // namespace dmcache
