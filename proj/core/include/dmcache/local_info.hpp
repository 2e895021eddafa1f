#pragma once

#include <cstdint>
#include <map>

namespace dmcache {

struct LocalEstimate {
  double latency = 1.0;
  double cost = 1.0;
};

/// Per-size-class exponentially weighted averages of observed fetch latency
/// and cost. Size classes are powers of two in 64-byte blocks.
class LocalInfo {
 public:
  explicit LocalInfo(double smoothing = 0.2) : alpha_(smoothing) {}

  void observe(std::uint64_t size_bytes, double latency, double cost);
  LocalEstimate estimate(std::uint64_t size_bytes) const;
  static unsigned size_class(std::uint64_t size_bytes);

 private:
  double alpha_;
  std::map<unsigned, LocalEstimate> classes_;  // starts from the defaults
};

}  // namespace dmcache
