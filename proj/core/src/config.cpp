#include "dmcache/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <sstream>

#include "dmcache/algorithm.hpp"
#include "dmcache/errors.hpp"

namespace dmcache {

namespace {

[[noreturn]] void field_error(const std::string& key, const std::string& why) {
  throw Error(ErrorCode::kConfig, key + ": " + why);
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::uint64_t to_u64(const std::string& key, const std::string& v, std::uint64_t max = UINT64_MAX) {
  try {
    std::size_t used = 0;
    if (!v.empty() && v[0] == '-') throw std::invalid_argument(v);
    const std::uint64_t n = std::stoull(v, &used, 0);
    if (used != v.size()) throw std::invalid_argument(v);
    if (n > max) field_error(key, "value " + v + " exceeds " + std::to_string(max));
    return n;
  } catch (const Error&) {
    throw;
  } catch (const std::exception&) {
    field_error(key, "expected a non-negative integer, got '" + v + "'");
  }
}

double to_f64(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    field_error(key, "expected a number, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "on" || v == "true" || v == "1" || v == "yes") return true;
  if (v == "off" || v == "false" || v == "0" || v == "no") return false;
  field_error(key, "expected on/off, got '" + v + "'");
}

std::string f64(double d) {
  std::ostringstream os;
  os << std::setprecision(17) << d;
  return os.str();
}

std::string onoff(bool b) { return b ? "on" : "off"; }

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + v[i];
  return out;
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

const char* distribution_name(Distribution d) {
  switch (d) {
    case Distribution::kZipfian: return "zipfian";
    case Distribution::kUniform: return "uniform";
    case Distribution::kPhase: return "phase";
    case Distribution::kTrace: return "trace";
  }
  return "zipfian";
}

struct Field {
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

#define DMCACHE_U64(name, member, max)                                                     \
  Field {                                                                                \
    name, [](const RunConfig& c) { return std::to_string(c.member); },                   \
        [](RunConfig& c, const std::string& v) {                                         \
          c.member = static_cast<decltype(c.member)>(to_u64(name, v, max));              \
        }                                                                                \
  }
#define DMCACHE_F64(name, member)                                                            \
  Field {                                                                                  \
    name, [](const RunConfig& c) { return f64(c.member); },                                \
        [](RunConfig& c, const std::string& v) { c.member = to_f64(name, v); }             \
  }
#define DMCACHE_BOOL(name, member)                                                           \
  Field {                                                                                  \
    name, [](const RunConfig& c) { return onoff(c.member); },                              \
        [](RunConfig& c, const std::string& v) { c.member = to_bool(name, v); }            \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> all = {
      Field{"schema", [](const RunConfig& c) { return std::to_string(c.schema); },
            [](RunConfig& c, const std::string& v) {
              c.schema = static_cast<int>(to_u64("schema", v, 1000));
              if (c.schema != kConfigSchema) field_error("schema", "unsupported schema " + v);
            }},
      Field{"transport",
            [](const RunConfig& c) {
              if (c.transport == TransportKind::kInProc) return std::string("inproc");
              if (c.tcp_port == 0) return std::string("tcp");
              return "tcp:" + c.tcp_host + ":" + std::to_string(c.tcp_port);
            },
            [](RunConfig& c, const std::string& v) {
              if (v == "inproc") {
                c.transport = TransportKind::kInProc;
              } else if (v == "tcp") {
                c.transport = TransportKind::kTcp;
                c.tcp_port = 0;
              } else if (v.rfind("tcp:", 0) == 0) {
                const auto colon = v.rfind(':');
                if (colon <= 4) field_error("transport", "expected tcp:<host>:<port>");
                c.transport = TransportKind::kTcp;
                c.tcp_host = v.substr(4, colon - 4);
                c.tcp_port = static_cast<std::uint16_t>(to_u64("transport", v.substr(colon + 1), 65535));
              } else {
                field_error("transport", "expected inproc, tcp or tcp:<host>:<port>, got '" + v + "'");
              }
            }},
      DMCACHE_U64("clients", clients, 1024),
      DMCACHE_U64("cache_capacity_objects", cache_capacity_objects, UINT64_MAX),
      DMCACHE_U64("num_buckets", num_buckets, UINT64_MAX),
      DMCACHE_U64("slots_per_bucket", slots_per_bucket, 1024),
      Field{"experts", [](const RunConfig& c) { return join(c.experts); },
            [](RunConfig& c, const std::string& v) { c.experts = split(v); }},
      DMCACHE_BOOL("adaptive", adaptive),
      DMCACHE_U64("sample_k", sample_k, 1u << 20),
      DMCACHE_BOOL("sample_until_k_live", sample_until_k_live),
      DMCACHE_U64("fc.threshold", fc_threshold, UINT64_MAX),
      DMCACHE_U64("fc.capacity_bytes", fc_capacity_bytes, UINT64_MAX),
      DMCACHE_F64("adaptive.lambda", lambda),
      DMCACHE_U64("adaptive.batch_size", batch_size, UINT32_MAX),
      DMCACHE_U64("adaptive.history_len", history_len, UINT64_MAX),
      DMCACHE_U64("adaptive.counter_refresh_ops", counter_refresh_ops, UINT64_MAX),
      Field{"clock", [](const RunConfig& c) { return std::string(c.clock == ClockKind::kLogical ? "logical" : "wall"); },
            [](RunConfig& c, const std::string& v) {
              if (v == "logical") c.clock = ClockKind::kLogical;
              else if (v == "wall") c.clock = ClockKind::kWall;
              else field_error("clock", "expected logical or wall, got '" + v + "'");
            }},
      Field{"penalty_mode",
            [](const RunConfig& c) { return std::string(c.penalty_mode == PenaltyMode::kVirtual ? "virtual" : "sleep"); },
            [](RunConfig& c, const std::string& v) {
              if (v == "virtual") c.penalty_mode = PenaltyMode::kVirtual;
              else if (v == "sleep") c.penalty_mode = PenaltyMode::kSleep;
              else field_error("penalty_mode", "expected virtual or sleep, got '" + v + "'");
            }},
      DMCACHE_U64("verb_delay_us", verb_delay_us, 1000000),
      DMCACHE_U64("seed", seed, UINT64_MAX),
      DMCACHE_U64("hash_seed", hash_seed, UINT64_MAX),
      Field{"output", [](const RunConfig& c) { return c.output; },
            [](RunConfig& c, const std::string& v) { c.output = v; }},
      DMCACHE_U64("trajectory_every", trajectory_every, UINT64_MAX),
      Field{"workload.distribution", [](const RunConfig& c) { return std::string(distribution_name(c.workload.distribution)); },
            [](RunConfig& c, const std::string& v) {
              if (v == "zipfian") c.workload.distribution = Distribution::kZipfian;
              else if (v == "uniform") c.workload.distribution = Distribution::kUniform;
              else if (v == "phase") c.workload.distribution = Distribution::kPhase;
              else if (v == "trace") c.workload.distribution = Distribution::kTrace;
              else field_error("workload.distribution", "expected zipfian, uniform, phase or trace, got '" + v + "'");
            }},
      Field{"workload.mix", nullptr,
            [](RunConfig& c, const std::string& v) {
              if (v.size() != 1) field_error("workload.mix", "expected one of A, B, C, D");
              apply_ycsb_mix(c.workload, v[0]);
            }},
      DMCACHE_U64("workload.num_keys", workload.num_keys, UINT64_MAX),
      DMCACHE_U64("workload.key_bytes", workload.key_bytes, UINT16_MAX),
      DMCACHE_U64("workload.value_bytes", workload.value_bytes, UINT32_MAX),
      DMCACHE_F64("workload.get_ratio", workload.get_ratio),
      DMCACHE_F64("workload.update_ratio", workload.update_ratio),
      DMCACHE_F64("workload.insert_ratio", workload.insert_ratio),
      DMCACHE_F64("workload.theta", workload.theta),
      DMCACHE_U64("workload.ops", workload.ops, UINT64_MAX),
      DMCACHE_U64("workload.warmup_ops", workload.warmup_ops, UINT64_MAX),
      DMCACHE_BOOL("workload.load", workload.load),
      DMCACHE_U64("workload.miss_penalty_us", workload.miss_penalty_us, UINT32_MAX),
      DMCACHE_U64("workload.seed", workload.seed, UINT64_MAX),
      Field{"workload.trace_path", [](const RunConfig& c) { return c.workload.trace_path; },
            [](RunConfig& c, const std::string& v) { c.workload.trace_path = v; }},
      DMCACHE_U64("workload.phase.lru_phase_len", workload.phase.lru_phase_len, UINT64_MAX),
      DMCACHE_U64("workload.phase.lfu_phase_len", workload.phase.lfu_phase_len, UINT64_MAX),
      DMCACHE_U64("workload.phase.phases", workload.phase.phases, 1000000),
      DMCACHE_U64("workload.phase.cache_objects", workload.phase.cache_objects, UINT64_MAX),
      DMCACHE_F64("workload.phase.window_factor", workload.phase.window_factor),
      DMCACHE_U64("workload.phase.drift", workload.phase.drift, UINT32_MAX),
      DMCACHE_F64("workload.phase.hot_factor", workload.phase.hot_factor),
      DMCACHE_F64("workload.phase.hot_theta", workload.phase.hot_theta),
      DMCACHE_F64("workload.phase.scan_factor", workload.phase.scan_factor),
      DMCACHE_F64("workload.phase.hot_run_factor", workload.phase.hot_run_factor),
      DMCACHE_BOOL("workload.phase.lru_first", workload.phase.lru_first),
  };
  return all;
}

#undef DMCACHE_U64
#undef DMCACHE_F64
#undef DMCACHE_BOOL

}  // namespace

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const Field& f : fields()) out.push_back(f.key);
  return out;
}

void apply_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
  for (const Field& f : fields()) {
    if (f.key == key) {
      f.set(cfg, value);
      return;
    }
  }
  throw Error(ErrorCode::kConfig, key + ": unknown field");
}

RunConfig parse_config(std::istream& in) {
  RunConfig cfg;
  std::string line;
  std::uint64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kConfig, "line " + std::to_string(line_no) + ": expected key = value");
    }
    try {
      apply_config_value(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const Error& e) {
      throw Error(ErrorCode::kConfig, "line " + std::to_string(line_no) + ": " +
                                          std::string(e.what()).substr(std::string("Config: ").size()));
    }
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfig, "cannot open config '" + path.string() + "'");
  return parse_config(in);
}

std::string serialize_config(const RunConfig& cfg) {
  std::ostringstream os;
  for (const Field& f : fields()) {
    if (!f.get) continue;
    os << f.key << " = " << f.get(cfg) << "\n";
  }
  return os.str();
}

bool operator==(const RunConfig& a, const RunConfig& b) { return serialize_config(a) == serialize_config(b); }

void RunConfig::validate() const {
  if (clients == 0) field_error("clients", "must be at least 1");
  if (cache_capacity_objects == 0) field_error("cache_capacity_objects", "must be at least 1");
  if (num_buckets != 0 && (num_buckets & (num_buckets - 1)) != 0) field_error("num_buckets", "must be a power of two");
  if (slots_per_bucket == 0) field_error("slots_per_bucket", "must be at least 1");
  if (experts.empty()) field_error("experts", "at least one expert is required");
  if (experts.size() > AlgorithmRegistry::kMaxExperts) field_error("experts", "at most 32 experts");
  for (const auto& e : experts) {
    try {
      (void)make_builtin(e);
    } catch (const Error&) {
      field_error("experts", "unknown algorithm '" + e + "'");
    }
  }
  if (sample_k == 0) field_error("sample_k", "must be at least 1");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) field_error("adaptive.lambda", "must be a positive number");
  if (batch_size == 0) field_error("adaptive.batch_size", "must be at least 1");
  if (trajectory_every == 0) field_error("trajectory_every", "must be at least 1");
  if (transport == TransportKind::kTcp && tcp_port == 0 && tcp_host != "127.0.0.1") {
    field_error("transport", "a private server only listens on 127.0.0.1");
  }
  resolved_workload().validate();
}

WorkloadSpec RunConfig::resolved_workload() const {
  WorkloadSpec w = workload;
  if (w.phase.cache_objects == 0) w.phase.cache_objects = cache_capacity_objects;
  return w;
}

}  // namespace dmcache
