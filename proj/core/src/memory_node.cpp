#include "dmcache/memory_node.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>
#include <limits>
#include <string>

#include "dmcache/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "the memory node stores words in host order and assumes little-endian");

namespace dmcache {

namespace {

std::uint64_t round_up_blocks(std::uint64_t size) {
  return (size + kBlockBytes - 1) / kBlockBytes * kBlockBytes;
}

std::string hex(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "0x%llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

// ---------------------------------------------------------------------------
// Controller

Controller::Controller(std::uint64_t heap_base, std::uint64_t heap_end, std::size_t num_experts)
    : heap_base_(heap_base), heap_end_(heap_end) {
  if (heap_base % kBlockBytes != 0 || heap_end % kBlockBytes != 0 || heap_end < heap_base) {
    throw Error(ErrorCode::kInvalidArgument, "heap bounds must be 64-byte aligned and ordered");
  }
  if (heap_end > heap_base) {
    free_extents_.emplace(heap_base, heap_end - heap_base);
    free_bytes_ = heap_end - heap_base;
  }
  weights_.assign(std::max<std::size_t>(num_experts, 1), 1.0 / std::max<std::size_t>(num_experts, 1));
}

std::uint64_t Controller::alloc(std::uint64_t size) {
  if (size == 0) throw Error(ErrorCode::kInvalidArgument, "alloc of zero bytes");
  const std::uint64_t bytes = round_up_blocks(size);
  std::lock_guard lock(mu_);
  for (auto it = free_extents_.begin(); it != free_extents_.end(); ++it) {
    if (it->second < bytes) continue;
    const std::uint64_t addr = it->first;
    const std::uint64_t rest = it->second - bytes;
    free_extents_.erase(it);
    if (rest > 0) free_extents_.emplace(addr + bytes, rest);
    live_.emplace(addr, bytes);
    free_bytes_ -= bytes;
    freed_starts_.erase(freed_starts_.lower_bound(addr), freed_starts_.lower_bound(addr + bytes));
    return addr;
  }
  throw Error(ErrorCode::kOutOfMemory, "no free region of " + std::to_string(bytes) + " bytes");
}

void Controller::free(std::uint64_t addr) {
  std::lock_guard lock(mu_);
  auto live = live_.find(addr);
  if (live == live_.end()) {
    if (freed_starts_.count(addr) != 0) throw Error(ErrorCode::kDoubleFree, "free of " + hex(addr));
    throw Error(ErrorCode::kUnknownAddr, "free of " + hex(addr));
  }
  std::uint64_t start = addr;
  std::uint64_t bytes = live->second;
  live_.erase(live);
  free_bytes_ += bytes;
  freed_starts_.insert(addr);

  auto next = free_extents_.lower_bound(start);
  if (next != free_extents_.end() && next->first == start + bytes) {
    bytes += next->second;
    next = free_extents_.erase(next);
  }
  if (next != free_extents_.begin()) {
    auto prev = std::prev(next);
    if (prev->first + prev->second == start) {
      start = prev->first;
      bytes += prev->second;
      free_extents_.erase(prev);
    }
  }
  free_extents_.emplace(start, bytes);
}

std::vector<double> Controller::apply_penalties(std::span<const double> sums) {
  std::lock_guard lock(mu_);
  if (sums.size() != weights_.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "expected " + std::to_string(weights_.size()) +
                                                   " penalty sums, got " + std::to_string(sums.size()));
  }
  for (double s : sums) {
    if (!std::isfinite(s)) throw Error(ErrorCode::kInvalidArgument, "non-finite penalty sum");
  }
  // Work in log space so a long losing streak cannot underflow every weight.
  std::vector<double> logs(weights_.size());
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    logs[i] = (weights_[i] > 0.0 ? std::log(weights_[i]) : -std::numeric_limits<double>::infinity()) - sums[i];
    top = std::max(top, logs[i]);
  }
  if (!std::isfinite(top)) return weights_;
  double total = 0.0;
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    weights_[i] = std::exp(logs[i] - top);
    total += weights_[i];
  }
  for (double& w : weights_) w /= total;
  return weights_;
}

std::vector<double> Controller::weights() const {
  std::lock_guard lock(mu_);
  return weights_;
}

std::vector<Allocation> Controller::live_allocations() const {
  std::lock_guard lock(mu_);
  std::vector<Allocation> out;
  out.reserve(live_.size());
  for (const auto& [addr, bytes] : live_) out.push_back({addr, bytes});
  std::sort(out.begin(), out.end(), [](const Allocation& a, const Allocation& b) { return a.addr < b.addr; });
  return out;
}

std::uint64_t Controller::free_bytes() const {
  std::lock_guard lock(mu_);
  return free_bytes_;
}

// ---------------------------------------------------------------------------
// MemoryNode

MemoryNode::MemoryNode(const Options& opts)
    : capacity_(opts.capacity),
      words_(std::make_unique<std::atomic<std::uint64_t>[]>(opts.capacity / 8)),
      controller_(opts.heap_base, opts.capacity, opts.num_experts),
      verb_delay_us_(opts.verb_delay_us) {
  if (capacity_ == 0 || capacity_ % kBlockBytes != 0) {
    throw Error(ErrorCode::kInvalidArgument, "capacity must be a positive multiple of 64");
  }
  for (std::uint64_t i = 0; i < capacity_ / 8; ++i) words_[i].store(0, std::memory_order_relaxed);
}

void MemoryNode::check_range(std::uint64_t addr, std::uint64_t len) const {
  if (addr > capacity_ || len > capacity_ - addr) {
    throw Error(ErrorCode::kOutOfRange, "[" + hex(addr) + ", +" + std::to_string(len) + ") exceeds capacity " +
                                            std::to_string(capacity_));
  }
}

void MemoryNode::check_word(std::uint64_t addr) const {
  check_range(addr, 8);
  if (addr % 8 != 0) throw Error(ErrorCode::kMisaligned, "atomic verb at " + hex(addr));
}

std::atomic<std::uint64_t>& MemoryNode::word_at(std::uint64_t addr) { return words_[addr / 8]; }

bool MemoryNode::tracked(std::uint64_t word_addr) const {
  if (track_count_ == 0 || word_addr < track_base_) return false;
  const std::uint64_t rel = word_addr - track_base_;
  return rel / track_stride_ < track_count_ && rel % track_stride_ == track_offset_;
}

void MemoryNode::track_overwrites(std::uint64_t base, std::uint64_t stride, std::uint64_t offset,
                                  std::uint64_t count) {
  if (stride == 0 || stride % 8 != 0 || offset % 8 != 0 || offset >= stride) {
    throw Error(ErrorCode::kInvalidArgument, "tracked words must be 8-byte aligned within the stride");
  }
  check_range(base, stride * count);
  track_base_ = base;
  track_stride_ = stride;
  track_offset_ = offset;
  track_count_ = count;
}

void MemoryNode::inject_delay() const {
  if (verb_delay_us_ == 0) return;
  const auto until = std::chrono::steady_clock::now() + std::chrono::microseconds(verb_delay_us_);
  while (std::chrono::steady_clock::now() < until) {
  }
}

void MemoryNode::read(std::uint64_t addr, std::span<std::byte> out) {
  check_range(addr, out.size());
  inject_delay();
  std::uint64_t pos = addr;
  const std::uint64_t end = addr + out.size();
  while (pos < end) {
    const std::uint64_t word_addr = pos & ~std::uint64_t{7};
    const std::uint64_t v = word_at(word_addr).load(std::memory_order_acquire);
    const std::uint64_t skip = pos - word_addr;
    const std::uint64_t n = std::min<std::uint64_t>(8 - skip, end - pos);
    std::memcpy(out.data() + (pos - addr), reinterpret_cast<const std::byte*>(&v) + skip, n);
    pos += n;
  }
  counters_.on_read(out.size());
}

std::vector<std::byte> MemoryNode::read(std::uint64_t addr, std::uint32_t len) {
  std::vector<std::byte> out(len);
  read(addr, out);
  return out;
}

void MemoryNode::write(std::uint64_t addr, std::span<const std::byte> data) {
  check_range(addr, data.size());
  inject_delay();
  std::uint64_t pos = addr;
  const std::uint64_t end = addr + data.size();
  while (pos < end) {
    const std::uint64_t word_addr = pos & ~std::uint64_t{7};
    const std::uint64_t skip = pos - word_addr;
    const std::uint64_t n = std::min<std::uint64_t>(8 - skip, end - pos);
    auto& word = word_at(word_addr);
    if (n == 8) {
      std::uint64_t v;
      std::memcpy(&v, data.data() + (pos - addr), 8);
      if (tracked(word_addr)) {
        overwritten_sum_.fetch_add(word.exchange(v, std::memory_order_acq_rel), std::memory_order_relaxed);
      } else {
        word.store(v, std::memory_order_release);
      }
    } else {
      std::uint64_t old = word.load(std::memory_order_relaxed);
      std::uint64_t merged;
      do {
        merged = old;
        std::memcpy(reinterpret_cast<std::byte*>(&merged) + skip, data.data() + (pos - addr), n);
      } while (!word.compare_exchange_weak(old, merged, std::memory_order_acq_rel, std::memory_order_relaxed));
    }
    pos += n;
  }
  counters_.on_write(data.size());
}

std::uint64_t MemoryNode::cas(std::uint64_t addr, std::uint64_t expected, std::uint64_t desired) {
  check_word(addr);
  inject_delay();
  std::uint64_t observed = expected;
  word_at(addr).compare_exchange_strong(observed, desired, std::memory_order_seq_cst);
  counters_.on_cas();
  return observed;
}

std::uint64_t MemoryNode::faa(std::uint64_t addr, std::uint64_t delta) {
  check_word(addr);
  inject_delay();
  const std::uint64_t prior = word_at(addr).fetch_add(delta, std::memory_order_seq_cst);
  counters_.on_faa();
  return prior;
}

std::uint64_t MemoryNode::alloc(std::uint64_t size) {
  const std::uint64_t addr = controller_.alloc(size);
  counters_.on_alloc();
  return addr;
}

void MemoryNode::free(std::uint64_t addr) {
  controller_.free(addr);
  counters_.on_free();
}

std::vector<double> MemoryNode::rpc_apply_penalties(std::span<const double> penalty_sums) {
  auto w = controller_.apply_penalties(penalty_sums);
  counters_.on_rpc();
  return w;
}

}  // namespace dmcache
