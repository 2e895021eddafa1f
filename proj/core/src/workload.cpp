#include "dmcache/workload.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>

#include "dmcache/errors.hpp"
#include "dmcache/zipf.hpp"

namespace dmcache {

namespace {

std::uint64_t scaled(double factor, std::uint64_t base) {
  return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(factor * double(base))));
}

std::mt19937_64 stream_rng(std::uint64_t seed, std::uint32_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), index};
  return std::mt19937_64(seq);
}

}  // namespace

void WorkloadSpec::validate() const {
  auto bad = [](const std::string& field, const std::string& why) {
    throw Error(ErrorCode::kConfig, "workload." + field + ": " + why);
  };
  if (key_bytes == 0) bad("key_bytes", "must be positive");
  if (get_ratio < 0 || update_ratio < 0 || insert_ratio < 0) bad("get_ratio", "ratios must be non-negative");
  if (std::abs(get_ratio + update_ratio + insert_ratio - 1.0) > 1e-9) bad("get_ratio", "ratios must sum to 1");
  switch (distribution) {
    case Distribution::kZipfian:
      if (!(theta > 0.0 && theta <= 1.0)) bad("theta", "must be in (0, 1]");
      [[fallthrough]];
    case Distribution::kUniform:
      if (num_keys == 0) bad("num_keys", "must be positive");
      break;
    case Distribution::kPhase:
      if (phase.lru_phase_len == 0 || phase.lfu_phase_len == 0) bad("phase.lru_phase_len", "lengths must be positive");
      if (phase.phases == 0) bad("phase.phases", "must be positive");
      if (phase.cache_objects == 0) bad("phase.cache_objects", "must be positive");
      if (phase.drift == 0) bad("phase.drift", "must be positive");
      if (!(phase.hot_theta > 0.0 && phase.hot_theta <= 1.0)) bad("phase.hot_theta", "must be in (0, 1]");
      break;
    case Distribution::kTrace:
      if (trace_path.empty()) bad("trace_path", "required for trace workloads");
      break;
  }
}

std::string make_key(std::uint64_t id, std::uint32_t key_bytes) {
  std::string digits = std::to_string(id);
  const std::size_t width = key_bytes > 1 ? key_bytes - 1 : 0;
  if (digits.size() < width) digits.insert(0, width - digits.size(), '0');
  return "k" + digits;
}

void apply_ycsb_mix(WorkloadSpec& spec, char mix) {
  switch (mix) {
    case 'A': case 'a': spec.get_ratio = 0.5;  spec.update_ratio = 0.5;  spec.insert_ratio = 0.0;  break;
    case 'B': case 'b': spec.get_ratio = 0.95; spec.update_ratio = 0.05; spec.insert_ratio = 0.0;  break;
    case 'C': case 'c': spec.get_ratio = 1.0;  spec.update_ratio = 0.0;  spec.insert_ratio = 0.0;  break;
    case 'D': case 'd': spec.get_ratio = 0.95; spec.update_ratio = 0.0;  spec.insert_ratio = 0.05; break;
    default: throw Error(ErrorCode::kConfig, std::string("workload.mix: unknown mix '") + mix + "'");
  }
}

std::vector<PhaseRange> phase_ranges(const PhaseSpec& spec) {
  std::vector<PhaseRange> out;
  std::uint64_t at = 0;
  for (std::uint32_t p = 0; p < spec.phases; ++p) {
    const bool lru = (p % 2 == 0) == spec.lru_first;
    const std::uint64_t len = lru ? spec.lru_phase_len : spec.lfu_phase_len;
    out.push_back({lru, at, at + len});
    at += len;
  }
  return out;
}

std::vector<Request> phase_workload(const PhaseSpec& spec, std::uint32_t key_bytes, std::uint32_t value_bytes,
                                    std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::uint64_t hot = scaled(spec.hot_factor, spec.cache_objects);
  const std::uint64_t window = scaled(spec.window_factor, spec.cache_objects);
  const std::uint64_t scan = scaled(spec.scan_factor, spec.cache_objects);
  const std::uint64_t hot_run = scaled(spec.hot_run_factor, hot);
  const ZipfGenerator hot_keys(hot, spec.hot_theta);
  std::uint64_t fresh = hot;  // ids below `hot` are the hot set

  std::vector<Request> out;
  auto emit = [&](std::uint64_t id) { out.push_back({Op::kGet, make_key(id, key_bytes), value_bytes}); };
  for (const PhaseRange& r : phase_ranges(spec)) {
    const std::uint64_t len = r.end - r.begin;
    if (r.lru_friendly) {
      std::uint64_t base = fresh;
      std::uniform_int_distribution<std::uint64_t> offset(0, window - 1);
      for (std::uint64_t i = 0; i < len; ++i) {
        if (i > 0 && i % spec.drift == 0) ++base;
        emit(base + offset(rng));
      }
      fresh = base + window;
    } else {
      std::uint64_t i = 0;
      while (i < len) {
        for (std::uint64_t j = 0; j < hot_run && i < len; ++j, ++i) emit(hot_keys.next(rng));
        for (std::uint64_t j = 0; j < scan && i < len; ++j, ++i) emit(fresh++);
      }
    }
  }
  return out;
}

std::vector<Request> load_stream(const WorkloadSpec& spec, std::uint32_t stream_index, std::uint32_t stream_count) {
  std::vector<Request> out;
  if (!spec.load || spec.distribution == Distribution::kPhase || spec.distribution == Distribution::kTrace) return out;
  for (std::uint64_t id = stream_index; id < spec.num_keys; id += stream_count) {
    out.push_back({Op::kSet, make_key(id, spec.key_bytes), spec.value_bytes});
  }
  return out;
}

std::vector<Request> generate_stream(const WorkloadSpec& spec, std::uint32_t stream_index,
                                     std::uint32_t stream_count) {
  spec.validate();
  if (stream_count == 0 || stream_index >= stream_count) {
    throw Error(ErrorCode::kInvalidArgument, "stream index out of range");
  }
  if (spec.distribution == Distribution::kTrace) {
    const auto all = parse_trace(std::filesystem::path(spec.trace_path));
    std::vector<Request> out;
    for (std::size_t i = stream_index; i < all.size(); i += stream_count) out.push_back(all[i]);
    return out;
  }
  if (spec.distribution == Distribution::kPhase) {
    return phase_workload(spec.phase, spec.key_bytes, spec.value_bytes, spec.seed + stream_index);
  }

  const std::uint64_t ops = spec.ops / stream_count + (stream_index < spec.ops % stream_count ? 1 : 0);
  std::mt19937_64 rng = stream_rng(spec.seed, stream_index);
  std::optional<ZipfGenerator> zipf;
  if (spec.distribution == Distribution::kZipfian) zipf.emplace(spec.num_keys, spec.theta);
  std::uniform_int_distribution<std::uint64_t> uniform(0, spec.num_keys - 1);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uint64_t inserted = 0;

  std::vector<Request> out;
  out.reserve(ops);
  for (std::uint64_t i = 0; i < ops; ++i) {
    const double u = coin(rng);
    if (u >= spec.get_ratio + spec.update_ratio) {
      const std::uint64_t id = spec.num_keys + inserted++ * stream_count + stream_index;
      out.push_back({Op::kSet, make_key(id, spec.key_bytes), spec.value_bytes});
      continue;
    }
    const std::uint64_t id = zipf ? zipf->next(rng) : uniform(rng);
    const Op op = u < spec.get_ratio ? Op::kGet : Op::kSet;
    out.push_back({op, make_key(id, spec.key_bytes), spec.value_bytes});
  }
  return out;
}

std::vector<TraceRecord> parse_trace(std::istream& in) {
  std::vector<TraceRecord> out;
  std::string line;
  std::uint64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    std::string op, key, size, extra;
    fields >> op >> key;
    auto malformed = [&](const std::string& why) {
      throw Error(ErrorCode::kMalformedLine, "line " + std::to_string(line_no) + ": " + why);
    };
    if (key.empty()) malformed("missing key");
    if (op == "GET") {
      if (fields >> extra) malformed("unexpected field after GET key");
      out.push_back({Op::kGet, key, 0});
    } else if (op == "SET") {
      if (!(fields >> size)) malformed("missing value size");
      if (fields >> extra) malformed("unexpected field after SET value size");
      std::uint64_t n = 0;
      try {
        std::size_t used = 0;
        n = std::stoull(size, &used);
        if (used != size.size() || n > UINT32_MAX) throw std::invalid_argument(size);
      } catch (const std::exception&) {
        malformed("bad value size '" + size + "'");
      }
      out.push_back({Op::kSet, key, static_cast<std::uint32_t>(n)});
    } else {
      malformed("unknown operation '" + op + "'");
    }
  }
  return out;
}

std::vector<TraceRecord> parse_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfig, "cannot open trace '" + path.string() + "'");
  return parse_trace(in);
}

}  // namespace dmcache
