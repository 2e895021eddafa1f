#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dmcache {

/// Everything a priority or update rule may look at for one object. Built
/// client-side from the slot's inline metadata, the object's extended header
/// and locally estimated figures.
struct MetadataView {
  std::uint64_t size = 0;  // bytes, blocks * 64
  std::uint64_t insert_ts = 0;
  std::uint64_t last_ts = 0;
  std::uint64_t freq = 0;
  std::uint64_t hash = 0;
  double latency = 1.0;  // local estimate, never stored in the pool
  double cost = 1.0;     // local estimate, never stored in the pool
  std::uint64_t now = 0;
  double local_value = 0.0;     // per-client, per-algorithm scalar (e.g. inflation L)
  std::span<std::byte> ext;     // this algorithm's slice of the extended header

  std::uint64_t ext_u64(std::size_t offset) const;
  double ext_f64(std::size_t offset) const;
  void set_ext_u64(std::size_t offset, std::uint64_t v);
  void set_ext_f64(std::size_t offset, double v);
};

using PriorityFn = std::function<double(const MetadataView&)>;
using UpdateFn = std::function<void(MetadataView&)>;
using EvictFn = std::function<double(const MetadataView&, double victim_priority)>;

struct ExtDescriptor {
  std::uint16_t bytes = 0;
  UpdateFn init;  // runs on insert, may only touch ext
};

/// A caching algorithm as a plug-in. The framework maintains insert_ts,
/// last_ts and freq itself; `update` runs on every hit after freq has been
/// incremented and before last_ts is refreshed, and may only write ext.
struct AlgorithmSpec {
  std::string name;
  PriorityFn priority;
  UpdateFn update;
  ExtDescriptor ext;
  EvictFn on_evict;  // returns the new local_value after this algorithm's pick is evicted
};

/// Ordered set of experts. Position in the registry is the expert's bit in
/// history bitmaps. Each algorithm gets its own slice of the extended header.
class AlgorithmRegistry {
 public:
  static constexpr std::size_t kMaxExperts = 32;
  static constexpr std::size_t kMaxExtBytes = 64;

  std::size_t register_algorithm(AlgorithmSpec spec);

  std::size_t size() const { return specs_.size(); }
  bool empty() const { return specs_.empty(); }
  const AlgorithmSpec& at(std::size_t i) const { return specs_.at(i); }
  std::size_t ext_offset(std::size_t i) const { return offsets_.at(i); }
  std::size_t ext_bytes() const { return ext_total_; }
  std::vector<std::string> names() const;

  /// Fresh extended header for a new object. `local_values` holds each
  /// algorithm's client-local scalar.
  std::vector<std::byte> init_ext(const MetadataView& base, std::span<const double> local_values) const;

 private:
  std::vector<AlgorithmSpec> specs_;
  std::vector<std::size_t> offsets_;
  std::size_t ext_total_ = 0;
};

/// Names of the built-in algorithms, in canonical order.
const std::vector<std::string>& builtin_algorithm_names();

/// Builds a built-in algorithm by (case-insensitive) name.
AlgorithmSpec make_builtin(std::string_view name);

/// Registry holding the named built-ins in the given order.
AlgorithmRegistry make_registry(const std::vector<std::string>& names);

}  // namespace dmcache
