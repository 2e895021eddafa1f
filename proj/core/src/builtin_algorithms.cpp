#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "dmcache/algorithm.hpp"
#include "dmcache/errors.hpp"

namespace dmcache {

namespace {

double size_of(const MetadataView& m) { return static_cast<double>(std::max<std::uint64_t>(m.size, 1)); }
double age_of(const MetadataView& m, std::uint64_t since) {
  return m.now > since ? static_cast<double>(m.now - since) : 0.0;
}

// Inflation-based algorithms raise L to the priority of whatever they evict.
double inflate(const MetadataView&, double victim_priority) { return victim_priority; }

AlgorithmSpec lru() { return {"LRU", [](const MetadataView& m) { return double(m.last_ts); }, {}, {}, {}}; }
AlgorithmSpec lfu() { return {"LFU", [](const MetadataView& m) { return double(m.freq); }, {}, {}, {}}; }
AlgorithmSpec mru() { return {"MRU", [](const MetadataView& m) { return -double(m.last_ts); }, {}, {}, {}}; }
AlgorithmSpec fifo() { return {"FIFO", [](const MetadataView& m) { return double(m.insert_ts); }, {}, {}, {}}; }
AlgorithmSpec size() { return {"SIZE", [](const MetadataView& m) { return -double(m.size); }, {}, {}, {}}; }

AlgorithmSpec gds() {
  return {"GDS", [](const MetadataView& m) { return m.local_value + m.cost / size_of(m); }, {}, {}, inflate};
}

AlgorithmSpec gdsf() {
  return {"GDSF", [](const MetadataView& m) { return m.local_value + double(m.freq) * m.cost / size_of(m); }, {}, {},
          inflate};
}

// ext: aging value in force at the last access.
AlgorithmSpec lfuda() {
  auto stamp = [](MetadataView& m) { m.set_ext_f64(0, m.local_value); };
  return {"LFUDA", [](const MetadataView& m) { return double(m.freq) + m.ext_f64(0); }, stamp, {8, stamp}, inflate};
}

// ext: combined recency/frequency value and the time it was computed.
constexpr double kLrfuDecay = 1e-3;
double crf_at(const MetadataView& m) {
  return m.ext_f64(0) * std::exp2(-kLrfuDecay * age_of(m, m.ext_u64(8)));
}
AlgorithmSpec lrfu() {
  return {"LRFU", crf_at,
          [](MetadataView& m) {
            m.set_ext_f64(0, 1.0 + crf_at(m));
            m.set_ext_u64(8, m.now);
          },
          {16,
           [](MetadataView& m) {
             m.set_ext_f64(0, 1.0);
             m.set_ext_u64(8, m.now);
           }},
          {}};
}

// K = 2 sub-timestamps of 32 bits each, truncated to their low-order bits.
constexpr std::uint64_t kLruK = 2;
std::uint64_t lruk_sub(const MetadataView& m, std::uint64_t idx) {
  return (m.ext_u64(0) >> (32 * idx)) & 0xFFFFFFFFull;
}
void lruk_store(MetadataView& m, std::uint64_t idx, std::uint64_t ts) {
  std::uint64_t packed = m.ext_u64(0);
  packed &= ~(0xFFFFFFFFull << (32 * idx));
  packed |= (ts & 0xFFFFFFFFull) << (32 * idx);
  m.set_ext_u64(0, packed);
}
AlgorithmSpec lruk() {
  return {"LRUK",
          [](const MetadataView& m) {
            if (m.freq < kLruK) return double(m.insert_ts);
            return double(lruk_sub(m, (m.freq - kLruK + 1) % kLruK));
          },
          [](MetadataView& m) { lruk_store(m, m.freq % kLruK, m.now); },
          {8, [](MetadataView& m) { lruk_store(m, m.freq % kLruK, m.now); }},
          {}};
}

AlgorithmSpec hyperbolic() {
  return {"HYPERBOLIC",
          [](const MetadataView& m) { return double(m.freq) / std::max(1.0, age_of(m, m.insert_ts)); }, {}, {}, {}};
}

// Simplified LIRS: estimate the inter-reference recency from the two most
// recent accesses; objects seen once are charged twice their age.
// ext: timestamp of the access before last_ts.
AlgorithmSpec lirs() {
  return {"LIRS",
          [](const MetadataView& m) {
            if (m.freq >= 2) {
              const double irr = m.last_ts > m.ext_u64(0) ? double(m.last_ts - m.ext_u64(0)) : 0.0;
              return -std::max(irr, age_of(m, m.last_ts));
            }
            return -2.0 * age_of(m, m.insert_ts);
          },
          [](MetadataView& m) { m.set_ext_u64(0, m.last_ts); },
          {8, [](MetadataView& m) { m.set_ext_u64(0, m.now); }},
          {}};
}

std::string upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  out.erase(std::remove(out.begin(), out.end(), '-'), out.end());
  return out;
}

}  // namespace

const std::vector<std::string>& builtin_algorithm_names() {
  static const std::vector<std::string> names = {"LRU",  "LFU",  "MRU",  "GDS",  "LIRS",  "FIFO",
                                                 "SIZE", "GDSF", "LRFU", "LRUK", "LFUDA", "HYPERBOLIC"};
  return names;
}

AlgorithmSpec make_builtin(std::string_view name) {
  const std::string n = upper(name);
  if (n == "LRU") return lru();
  if (n == "LFU") return lfu();
  if (n == "MRU") return mru();
  if (n == "GDS") return gds();
  if (n == "LIRS") return lirs();
  if (n == "FIFO") return fifo();
  if (n == "SIZE") return size();
  if (n == "GDSF") return gdsf();
  if (n == "LRFU") return lrfu();
  if (n == "LRUK") return lruk();
  if (n == "LFUDA") return lfuda();
  if (n == "HYPERBOLIC") return hyperbolic();
  throw Error(ErrorCode::kInvalidArgument, "unknown algorithm '" + std::string(name) + "'");
}

}  // namespace dmcache
