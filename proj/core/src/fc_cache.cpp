#include "dmcache/fc_cache.hpp"

namespace dmcache {

FcCache::FcCache(std::uint64_t threshold, std::uint64_t capacity_bytes)
    : threshold_(threshold), capacity_(capacity_bytes) {}

FcFlush FcCache::remove(std::unordered_map<std::string, Entry>::iterator it) {
  FcFlush f{it->second.slot_addr, it->second.delta};
  auto s = by_slot_.find(f.slot_addr);
  if (s != by_slot_.end()) {
    s->second -= f.delta;
    if (s->second == 0) by_slot_.erase(s);
  }
  bytes_ -= it->first.size() + kEntryOverhead;
  insert_order_.erase(it->second.order);
  entries_.erase(it);
  return f;
}

FcRecordResult FcCache::record(std::string_view key, std::uint64_t slot_addr) {
  FcRecordResult r;
  auto& out = r.flushes;
  std::string k(key);
  auto it = entries_.find(k);
  if (it != entries_.end() && it->second.slot_addr != slot_addr) {
    out.push_back(remove(it));
    it = entries_.end();
  }
  if (it == entries_.end()) {
    insert_order_.push_back(k);
    it = entries_.emplace(k, Entry{slot_addr, 0, std::prev(insert_order_.end())}).first;
    bytes_ += k.size() + kEntryOverhead;
  }
  ++it->second.delta;
  ++by_slot_[slot_addr];
  if (it->second.delta > threshold_) {
    out.push_back(remove(it));
    r.own_delta = out.back().delta;
  }
  while (bytes_ > capacity_ && !insert_order_.empty()) {
    const bool own = insert_order_.front() == k;
    out.push_back(remove(entries_.find(insert_order_.front())));
    if (own) r.own_delta = out.back().delta;
  }
  return r;
}

std::vector<FcFlush> FcCache::drain() {
  std::vector<FcFlush> out;
  out.reserve(entries_.size());
  while (!insert_order_.empty()) out.push_back(remove(entries_.find(insert_order_.front())));
  return out;
}

std::uint64_t FcCache::pending(std::string_view key) const {
  auto it = entries_.find(std::string(key));
  return it == entries_.end() ? 0 : it->second.delta;
}

std::uint64_t FcCache::pending_for_slot(std::uint64_t slot_addr) const {
  auto it = by_slot_.find(slot_addr);
  return it == by_slot_.end() ? 0 : it->second;
}

}  // namespace dmcache
