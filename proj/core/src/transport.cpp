#include "dmcache/transport.hpp"

#include <cstring>

namespace dmcache {

void Transport::read(std::uint64_t addr, std::span<std::byte> out) {
  do_read(addr, out);
  counters_.on_read(out.size());
}

std::vector<std::byte> Transport::read(std::uint64_t addr, std::uint32_t len) {
  std::vector<std::byte> out(len);
  read(addr, out);
  return out;
}

void Transport::write(std::uint64_t addr, std::span<const std::byte> data) {
  do_write(addr, data);
  counters_.on_write(data.size());
}

std::uint64_t Transport::cas(std::uint64_t addr, std::uint64_t expected, std::uint64_t desired) {
  const std::uint64_t observed = do_cas(addr, expected, desired);
  counters_.on_cas();
  return observed;
}

std::uint64_t Transport::faa(std::uint64_t addr, std::uint64_t delta) {
  const std::uint64_t prior = do_faa(addr, delta);
  counters_.on_faa();
  return prior;
}

std::uint64_t Transport::alloc(std::uint64_t size) {
  const std::uint64_t addr = do_alloc(size);
  counters_.on_alloc();
  return addr;
}

void Transport::free(std::uint64_t addr) {
  do_free(addr);
  counters_.on_free();
}

std::vector<double> Transport::rpc_apply_penalties(std::span<const double> penalty_sums) {
  auto w = do_rpc_apply_penalties(penalty_sums);
  counters_.on_rpc();
  return w;
}

std::uint64_t Transport::read_word(std::uint64_t addr) {
  std::uint64_t v = 0;
  read(addr, std::as_writable_bytes(std::span(&v, 1)));
  return v;
}

void Transport::write_word(std::uint64_t addr, std::uint64_t value) {
  write(addr, std::as_bytes(std::span(&value, 1)));
}

}  // namespace dmcache
