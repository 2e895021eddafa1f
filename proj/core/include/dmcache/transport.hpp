#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dmcache/memory_node.hpp"
#include "dmcache/verb_stats.hpp"

namespace dmcache {

/// Client handle onto a memory node. The public verbs count completed
/// operations on the client side and forward to the concrete transport, so
/// budgets can be asserted per client whatever sits underneath.
/// One handle per client thread.
class Transport {
 public:
  virtual ~Transport() = default;

  void read(std::uint64_t addr, std::span<std::byte> out);
  std::vector<std::byte> read(std::uint64_t addr, std::uint32_t len);
  void write(std::uint64_t addr, std::span<const std::byte> data);
  std::uint64_t cas(std::uint64_t addr, std::uint64_t expected, std::uint64_t desired);
  std::uint64_t faa(std::uint64_t addr, std::uint64_t delta);
  std::uint64_t alloc(std::uint64_t size);
  void free(std::uint64_t addr);
  std::vector<double> rpc_apply_penalties(std::span<const double> penalty_sums);

  std::uint64_t read_word(std::uint64_t addr);
  void write_word(std::uint64_t addr, std::uint64_t value);

  VerbStats stats() const { return counters_.snapshot(); }

 protected:
  virtual void do_read(std::uint64_t addr, std::span<std::byte> out) = 0;
  virtual void do_write(std::uint64_t addr, std::span<const std::byte> data) = 0;
  virtual std::uint64_t do_cas(std::uint64_t addr, std::uint64_t expected, std::uint64_t desired) = 0;
  virtual std::uint64_t do_faa(std::uint64_t addr, std::uint64_t delta) = 0;
  virtual std::uint64_t do_alloc(std::uint64_t size) = 0;
  virtual void do_free(std::uint64_t addr) = 0;
  virtual std::vector<double> do_rpc_apply_penalties(std::span<const double> penalty_sums) = 0;

 private:
  VerbCounters counters_;
};

class InProcTransport final : public Transport {
 public:
  explicit InProcTransport(MemoryNode& node) : node_(node) {}

  MemoryNode& node() { return node_; }

 protected:
  void do_read(std::uint64_t addr, std::span<std::byte> out) override { node_.read(addr, out); }
  void do_write(std::uint64_t addr, std::span<const std::byte> data) override { node_.write(addr, data); }
  std::uint64_t do_cas(std::uint64_t addr, std::uint64_t expected, std::uint64_t desired) override {
    return node_.cas(addr, expected, desired);
  }
  std::uint64_t do_faa(std::uint64_t addr, std::uint64_t delta) override { return node_.faa(addr, delta); }
  std::uint64_t do_alloc(std::uint64_t size) override { return node_.alloc(size); }
  void do_free(std::uint64_t addr) override { node_.free(addr); }
  std::vector<double> do_rpc_apply_penalties(std::span<const double> sums) override {
    return node_.rpc_apply_penalties(sums);
  }

 private:
  MemoryNode& node_;
};

}  // namespace dmcache
