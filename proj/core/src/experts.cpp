#include "dmcache/experts.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dmcache/errors.hpp"
#include "dmcache/history.hpp"

namespace dmcache {

ExpertState::ExpertState(std::size_t num_experts, double lambda, double discount, std::uint32_t batch_size)
    : weights_(num_experts, num_experts ? 1.0 / double(num_experts) : 0.0),
      penalty_sums_(num_experts, 0.0),
      lambda_(lambda),
      discount_(discount),
      batch_(std::max<std::uint32_t>(batch_size, 1)) {
  if (num_experts == 0) throw Error(ErrorCode::kInvalidArgument, "at least one expert is required");
}

bool ExpertState::collect_regret(std::uint32_t bmap, std::uint64_t position) {
  const double penalty = regret_penalty(lambda_, discount_, position);
  std::vector<double> logs(weights_.size());
  bool touched = false;
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    logs[i] = std::log(weights_[i]);
    if (bmap >> i & 1u) {
      logs[i] -= penalty;
      penalty_sums_[i] += penalty;
      touched = true;
    }
  }
  if (!touched) return false;
  const double top = *std::max_element(logs.begin(), logs.end());
  double total = 0.0;
  for (std::size_t i = 0; i < logs.size(); ++i) total += weights_[i] = std::exp(logs[i] - top);
  for (double& w : weights_) w /= total;
  return ++updates_ >= batch_;
}

bool ExpertState::flush(Transport& t) {
  try {
    adopt(t.rpc_apply_penalties(penalty_sums_));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kDimensionMismatch || e.code() == ErrorCode::kInvalidArgument) throw;
    return false;
  }
  std::fill(penalty_sums_.begin(), penalty_sums_.end(), 0.0);
  updates_ = 0;
  return true;
}

void ExpertState::adopt(std::vector<double> global_weights) {
  if (global_weights.size() != weights_.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "controller returned " + std::to_string(global_weights.size()) +
                                                   " weights for " + std::to_string(weights_.size()) + " experts");
  }
  weights_ = std::move(global_weights);
}

double expert_priority(const AlgorithmRegistry& reg, std::size_t i, SampledObject& obj, double local_value) {
  const AlgorithmSpec& spec = reg.at(i);
  MetadataView v = obj.view;
  v.local_value = local_value;
  v.ext = spec.ext.bytes ? std::span(obj.ext).subspan(reg.ext_offset(i), spec.ext.bytes) : std::span<std::byte>{};
  return spec.priority(v);
}

namespace {

// Equal priorities go to the least recently used object, then the lower address.
bool older(const SampledObject& a, const SampledObject& b) {
  if (a.view.last_ts != b.view.last_ts) return a.view.last_ts < b.view.last_ts;
  return a.slot.addr < b.slot.addr;
}

}  // namespace

std::size_t lowest_priority(std::span<SampledObject> samples, const AlgorithmRegistry& reg, std::size_t expert,
                            double local_value) {
  if (samples.empty()) throw Error(ErrorCode::kEvictionStarvation, "no live object among the samples");
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_i = samples.size();
  for (std::size_t s = 0; s < samples.size(); ++s) {
    const double p = expert_priority(reg, expert, samples[s], local_value);
    if (best_i == samples.size() || p < best || (p == best && older(samples[s], samples[best_i]))) {
      best = p;
      best_i = s;
    }
  }
  return best_i;
}

std::vector<std::size_t> propose_candidates(std::span<SampledObject> samples, const AlgorithmRegistry& reg,
                                            std::span<const double> local_values) {
  std::vector<std::size_t> out(reg.size(), 0);
  for (std::size_t e = 0; e < reg.size(); ++e) {
    out[e] = lowest_priority(samples, reg, e, e < local_values.size() ? local_values[e] : 0.0);
  }
  return out;
}

VictimChoice choose_victim(std::span<const std::size_t> candidates, std::span<const double> weights,
                           std::mt19937_64& rng) {
  if (candidates.empty() || candidates.size() != weights.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "candidates and weights differ in length");
  }
  VictimChoice c;
  if (candidates.size() == 1) {
    c.bmap = 1;
    c.sample_index = candidates[0];
    return c;
  }
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double total = 0.0;
  for (double w : weights) total += w;
  double acc = 0.0;
  c.expert = weights.size() - 1;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i] / total;
    if (u < acc && weights[i] > 0.0) {
      c.expert = i;
      break;
    }
  }
  while (weights[c.expert] <= 0.0 && c.expert > 0) --c.expert;
  c.sample_index = candidates[c.expert];
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i] == c.sample_index) c.bmap |= 1u << i;
  }
  return c;
}

namespace {

void free_object(Transport& t, const HashTable& table, const SlotAtomic& atomic) {
  for (const Allocation& seg : table.object_segments(t, atomic)) t.free(seg.addr);
}

}  // namespace

EvictOutcome evict_to_history(Transport& t, const HashTable& table, std::uint64_t counter_addr, const Slot& victim,
                              std::uint32_t bmap) {
  EvictOutcome out;
  std::uint64_t raw = t.faa(counter_addr, 1);
  out.faas = 1;
  while ((raw & history_mask()) == tombstone_id()) {
    raw = t.faa(counter_addr, 1);
    ++out.faas;
  }
  out.history_id = raw & history_mask();
  out.counter_after = raw + 1;
  const SlotAtomic tag{victim.atomic.fp, kHistorySize, out.history_id};
  if (t.cas(victim.addr, victim.word, encode_atomic(tag)) != victim.word) return out;
  t.write_word(victim.addr + kInsertTsOffset, encode_history_bitmap(out.history_id, bmap));
  free_object(t, table, victim.atomic);
  out.success = true;
  return out;
}

bool evict_to_tombstone(Transport& t, const HashTable& table, const Slot& victim) {
  const SlotAtomic tag{victim.atomic.fp, kHistorySize, tombstone_id()};
  if (t.cas(victim.addr, victim.word, encode_atomic(tag)) != victim.word) return false;
  t.write_word(victim.addr + kInsertTsOffset, encode_history_bitmap(tombstone_id(), 0));
  free_object(t, table, victim.atomic);
  return true;
}

}  // namespace dmcache
