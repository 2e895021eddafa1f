#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "dmcache/algorithm.hpp"
#include "dmcache/hash_table.hpp"
#include "dmcache/transport.hpp"

namespace dmcache {

inline constexpr double kDefaultLambda = 0.1;
inline constexpr std::uint32_t kDefaultBatchSize = 100;
inline constexpr std::uint64_t kDefaultCounterRefreshOps = 1000;
inline constexpr std::uint32_t kMaxSampleAttempts = 8;

/// Per-client learning state: local expert weights plus the penalty sums not
/// yet shipped to the controller.
class ExpertState {
 public:
  ExpertState(std::size_t num_experts, double lambda, double discount, std::uint32_t batch_size);

  std::size_t size() const { return weights_.size(); }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<double>& penalty_sums() const { return penalty_sums_; }
  std::uint32_t updates_since_flush() const { return updates_; }
  double lambda() const { return lambda_; }
  double discount() const { return discount_; }
  std::uint32_t batch_size() const { return batch_; }

  /// Charges every expert in `bmap` for a regret `position` entries deep in
  /// the history. Returns true once a flush is due.
  bool collect_regret(std::uint32_t bmap, std::uint64_t position);

  /// Ships the sums to the controller and adopts the global weights. On a
  /// transport failure the sums are kept for the next attempt.
  bool flush(Transport& t);

  void adopt(std::vector<double> global_weights);

 private:
  std::vector<double> weights_;
  std::vector<double> penalty_sums_;
  std::uint32_t updates_ = 0;
  double lambda_;
  double discount_;
  std::uint32_t batch_;
};

/// A sampled live object with its decoded view. `ext` is the full extended
/// header (empty when no registered algorithm uses one).
struct SampledObject {
  Slot slot;
  MetadataView view;
  std::vector<std::byte> ext;
};

/// Priority of `obj` under expert `i`, with that expert's ext slice and local
/// value wired into the view.
double expert_priority(const AlgorithmRegistry& reg, std::size_t i, SampledObject& obj, double local_value);

/// Index of the sample expert `expert` would evict. Equal priorities go to
/// the least recently used sample, then the lower address.
std::size_t lowest_priority(std::span<SampledObject> samples, const AlgorithmRegistry& reg, std::size_t expert,
                            double local_value);

/// Index into `samples` of each expert's eviction candidate.
std::vector<std::size_t> propose_candidates(std::span<SampledObject> samples, const AlgorithmRegistry& reg,
                                            std::span<const double> local_values);

struct VictimChoice {
  std::size_t sample_index = 0;
  std::size_t expert = 0;
  std::uint32_t bmap = 0;  // every expert whose candidate is the victim
};

/// Draws an expert with probability equal to its weight and takes its
/// candidate.
VictimChoice choose_victim(std::span<const std::size_t> candidates, std::span<const double> weights,
                           std::mt19937_64& rng);

struct EvictOutcome {
  bool success = false;
  std::uint64_t history_id = 0;
  std::uint64_t counter_after = 0;  // raw counter value following our FAA
  std::uint32_t faas = 0;
};

/// Turns `victim` into a history entry: FAA on the global counter, CAS the
/// atomic word to the history tag, WRITE the tagged bitmap into insert_ts,
/// FREE the object. A lost CAS abandons the acquired ID.
EvictOutcome evict_to_history(Transport& t, const HashTable& table, std::uint64_t counter_addr, const Slot& victim,
                              std::uint32_t bmap);

/// Single-expert eviction: CAS to a tombstone, WRITE the tombstone tag into
/// insert_ts, FREE. No history is kept.
bool evict_to_tombstone(Transport& t, const HashTable& table, const Slot& victim);

}  // namespace dmcache
