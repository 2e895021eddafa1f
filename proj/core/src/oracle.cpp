#include "dmcache/oracle.hpp"

#include <algorithm>
#include <cctype>

#include "dmcache/errors.hpp"

namespace dmcache {

OraclePolicy parse_oracle_policy(std::string_view name) {
  std::string n(name);
  std::transform(n.begin(), n.end(), n.begin(), [](unsigned char c) { return std::tolower(c); });
  if (n == "lru") return OraclePolicy::kLru;
  if (n == "lfu") return OraclePolicy::kLfu;
  if (n == "fifo") return OraclePolicy::kFifo;
  throw Error(ErrorCode::kInvalidArgument, "unknown oracle policy '" + std::string(name) + "'");
}

ExactCache::ExactCache(OraclePolicy policy, std::uint64_t capacity) : policy_(policy), capacity_(capacity) {
  if (capacity == 0) throw Error(ErrorCode::kInvalidArgument, "oracle capacity must be at least 1");
}

void ExactCache::touch(const std::string& key, Node& n) {
  switch (policy_) {
    case OraclePolicy::kLru:
      order_.splice(order_.end(), order_, n.pos);
      break;
    case OraclePolicy::kLfu:
      by_freq_.erase({n.freq, n.seq});
      ++n.freq;
      by_freq_.emplace(std::make_pair(n.freq, n.seq), key);
      break;
    case OraclePolicy::kFifo:
      break;
  }
}

void ExactCache::evict() {
  if (policy_ == OraclePolicy::kLfu) {
    auto it = by_freq_.begin();
    index_.erase(it->second);
    by_freq_.erase(it);
    return;
  }
  index_.erase(order_.front());
  order_.pop_front();
}

void ExactCache::insert(const std::string& key) {
  if (index_.size() >= capacity_) evict();
  Node n;
  n.freq = 1;
  n.seq = seq_++;
  if (policy_ == OraclePolicy::kLfu) {
    by_freq_.emplace(std::make_pair(n.freq, n.seq), key);
  } else {
    order_.push_back(key);
    n.pos = std::prev(order_.end());
  }
  index_.emplace(key, n);
}

bool ExactCache::access(const Request& r) {
  auto it = index_.find(r.key);
  if (it != index_.end()) {
    if (r.op == Op::kSet && policy_ == OraclePolicy::kFifo) {
      order_.splice(order_.end(), order_, it->second.pos);
    } else {
      touch(r.key, it->second);
    }
    return r.op == Op::kGet;
  }
  insert(r.key);
  return false;
}

OracleResult oracle_simulate(OraclePolicy policy, std::span<const Request> trace, std::uint64_t capacity,
                             std::uint64_t measure_from) {
  ExactCache cache(policy, capacity);
  OracleResult res;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const bool hit = cache.access(trace[i]);
    if (i >= measure_from && trace[i].op == Op::kGet) {
      ++res.gets;
      res.hits += hit ? 1 : 0;
    }
  }
  return res;
}

}  // namespace dmcache
