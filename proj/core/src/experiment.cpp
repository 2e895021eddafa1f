#include "dmcache/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "dmcache/errors.hpp"
#include "dmcache/object_codec.hpp"
#include "dmcache/oracle.hpp"

namespace dmcache {

std::uint64_t metadata_bytes(std::uint64_t cache_objects, std::uint64_t history_len, std::uint64_t experts) {
  return kSlotBytes * (cache_objects + history_len) + kWeightBytes * experts;
}

std::uint64_t object_blocks(const RunConfig& cfg, const AlgorithmRegistry& registry) {
  const std::uint64_t bytes =
      object_stream_bytes(registry.ext_bytes(), make_key(0, cfg.workload.key_bytes).size(), cfg.workload.value_bytes);
  std::uint64_t blocks = 0;
  for (std::uint64_t b : plan_segments(bytes)) blocks += b;
  return blocks;
}

std::uint64_t auto_bucket_count(std::uint64_t cache_objects, std::uint64_t history_len,
                                std::uint32_t slots_per_bucket) {
  const double want = 1.5 * double(cache_objects + history_len) / double(slots_per_bucket);
  std::uint64_t n = 1;
  while (double(n) < want) n <<= 1;
  return n;
}

PoolLayout plan_pool(const RunConfig& cfg, const AlgorithmRegistry& registry) {
  const std::uint64_t buckets =
      cfg.num_buckets ? cfg.num_buckets
                      : auto_bucket_count(cfg.cache_capacity_objects, cfg.effective_history_len(), cfg.slots_per_bucket);
  return PoolLayout::make(buckets, cfg.slots_per_bucket,
                          cfg.cache_capacity_objects * object_blocks(cfg, registry) * kBlockBytes);
}

Deployment::Deployment(const RunConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  registry_ = make_registry(cfg_.experts);
  layout_ = plan_pool(cfg_, registry_);
  const bool remote = cfg_.transport == TransportKind::kTcp && cfg_.tcp_port != 0;
  if (!remote) {
    node_ = std::make_unique<MemoryNode>(layout_.node_options(registry_.size(), cfg_.verb_delay_us));
    track_frequency_words(*node_, layout_);
  }
  if (cfg_.transport == TransportKind::kTcp && !remote) server_ = std::make_unique<TcpServer>(*node_, 0);
  if (cfg_.clock == ClockKind::kLogical) {
    clock_ = std::make_unique<LogicalClock>();
  } else {
    clock_ = std::make_unique<WallClock>();
  }
  for (std::uint32_t i = 0; i < cfg_.clients; ++i) {
    if (cfg_.transport == TransportKind::kInProc) {
      transports_.push_back(std::make_unique<InProcTransport>(*node_));
    } else {
      transports_.push_back(
          std::make_unique<TcpTransport>(cfg_.tcp_host, remote ? cfg_.tcp_port : server_->port()));
    }
    ClientOptions o;
    o.sample_k = cfg_.sample_k;
    o.sample_until_k_live = cfg_.sample_until_k_live;
    o.fc_threshold = cfg_.fc_threshold;
    o.fc_capacity_bytes = cfg_.fc_capacity_bytes;
    o.adaptive = cfg_.adaptive;
    o.lambda = cfg_.lambda;
    o.batch_size = cfg_.batch_size;
    o.history_len = cfg_.effective_history_len();
    o.cache_objects = cfg_.cache_capacity_objects;
    o.counter_refresh_ops = cfg_.counter_refresh_ops;
    o.seed = cfg_.seed * 0x9E3779B97F4A7C15ull + i + 1;
    o.hash_seed = cfg_.hash_seed;
    clients_.push_back(std::make_unique<CacheClient>(*transports_.back(), layout_, registry_, *clock_, o));
  }
}

Deployment::~Deployment() {
  clients_.clear();
  transports_.clear();
  if (server_) server_->stop();
}

std::vector<CacheClient*> Deployment::clients() {
  std::vector<CacheClient*> out;
  for (auto& c : clients_) out.push_back(c.get());
  return out;
}

RunMetrics Deployment::run(const std::string& variant) {
  RunOptions opts;
  opts.penalty_mode = cfg_.penalty_mode;
  opts.trajectory_every = cfg_.trajectory_every;
  auto cs = clients();
  RunMetrics m = run_workload(cfg_.resolved_workload(), cs, opts);
  if (node_) node_stats_at_end_ = node_->stats();
  m.variant = variant;
  m.experts = registry_.names();
  if (node_) m.final_weights = node_->controller().weights();
  m.cache_capacity_objects = cfg_.cache_capacity_objects;
  m.history_len = cfg_.effective_history_len();
  m.metadata_bytes = metadata_bytes(m.cache_capacity_objects, m.history_len, registry_.size());
  return m;
}

AuditReport Deployment::audit(bool inject_fault) {
  if (!node_) throw Error(ErrorCode::kConfig, "transport: audit needs the memory node in this process");
  AuditExpectations e;
  e.node_stats = node_stats_at_end_;
  for (auto& c : clients_) {
    e.client_stats += c->transport().stats();
    e.accesses += c->stats().accesses;
    e.history_faas += c->stats().history_faas;
    e.fc_flushes += c->stats().fc_flushes;
  }
  e.num_experts = static_cast<std::uint32_t>(registry_.size());
  if (inject_fault) inject_hash_fault(*node_, layout_);
  return audit_pool(*node_, layout_, cfg_.hash_seed, e);
}

RunMetrics run_config(const RunConfig& cfg, const std::string& variant) {
  Deployment d(cfg);
  return d.run(variant);
}

RunConfig variant_config(const RunConfig& base, const std::string& variant) {
  RunConfig c = base;
  if (variant == "adaptive") {
    c.adaptive = true;
    return c;
  }
  const std::string suffix = "-only";
  if (variant.size() > suffix.size() && variant.compare(variant.size() - suffix.size(), suffix.size(), suffix) == 0) {
    c.experts = {make_builtin(variant.substr(0, variant.size() - suffix.size())).name};
    c.adaptive = false;
    return c;
  }
  throw Error(ErrorCode::kConfig, "variants: unknown variant '" + variant + "'");
}

ReplaySequence replay_sequence(const RunConfig& cfg) {
  const WorkloadSpec w = cfg.resolved_workload();
  ReplaySequence seq;
  if (w.load) seq.requests = load_stream(w, 0, 1);
  seq.stream_offset = seq.requests.size();
  seq.measure_from = seq.stream_offset + w.warmup_ops;
  auto stream = generate_stream(w, 0, 1);
  seq.requests.insert(seq.requests.end(), std::make_move_iterator(stream.begin()),
                      std::make_move_iterator(stream.end()));
  return seq;
}

namespace {

CompareRow oracle_row(const RunConfig& cfg, OraclePolicy policy, const std::string& name) {
  const ReplaySequence seq = replay_sequence(cfg);
  ExactCache cache(policy, cfg.cache_capacity_objects);
  CompareRow row;
  row.variant = name;
  const WorkloadSpec w = cfg.resolved_workload();
  if (w.distribution == Distribution::kPhase) {
    for (const PhaseRange& r : phase_ranges(w.phase)) row.phases.push_back({r.lru_friendly, r.begin, r.end, 0, 0});
  }
  std::uint64_t gets = 0;
  std::uint64_t hits = 0;
  for (std::size_t i = 0; i < seq.requests.size(); ++i) {
    const Request& r = seq.requests[i];
    const bool hit = cache.access(r);
    if (r.op != Op::kGet) continue;
    if (i >= seq.measure_from) {
      ++gets;
      hits += hit;
    }
    const std::uint64_t at = i - seq.stream_offset;
    for (auto& p : row.phases) {
      if (i >= seq.stream_offset && at >= p.begin && at < p.end) {
        ++p.gets;
        p.hits += hit;
      }
    }
  }
  row.hit_rate = gets ? double(hits) / double(gets) : 0.0;
  return row;
}

std::string pct(double v) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(2);
  os << v * 100.0;
  return os.str();
}

}  // namespace

const CompareRow* CompareReport::find(const std::string& variant) const {
  for (const auto& r : rows) {
    if (r.variant == variant) return &r;
  }
  return nullptr;
}

bool CompareReport::passed() const {
  return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.passed; });
}

CompareReport run_compare(const RunConfig& cfg, const std::vector<std::string>& variants) {
  CompareReport report;
  for (const auto& v : variants) {
    if (v == "oracle") {
      if (cfg.clients != 1) throw Error(ErrorCode::kConfig, "variants: the oracle needs clients = 1");
      report.rows.push_back(oracle_row(cfg, OraclePolicy::kLru, "oracle-lru"));
      report.rows.push_back(oracle_row(cfg, OraclePolicy::kLfu, "oracle-lfu"));
      continue;
    }
    const RunMetrics m = run_config(variant_config(cfg, v), v);
    report.rows.push_back({v, m.hit_rate, m.phases, m.verbs.total_verbs(), m.final_weights});
  }

  const CompareRow* ad = report.find("adaptive");
  const CompareRow* lru = report.find("lru-only");
  const CompareRow* lfu = report.find("lfu-only");
  // The adaptivity bounds are claims about the phased workload only.
  if (ad && lru && lfu && cfg.workload.distribution == Distribution::kPhase) {
    const double best = std::max(lru->hit_rate, lfu->hit_rate);
    const double worst = std::min(lru->hit_rate, lfu->hit_rate);
    report.verdicts.push_back({"adaptive_near_best", ad->hit_rate >= best - 0.02,
                               "adaptive " + pct(ad->hit_rate) + "% vs best single " + pct(best) + "% - 2"});
    report.verdicts.push_back({"adaptive_beats_worst", ad->hit_rate > worst + 0.05,
                               "adaptive " + pct(ad->hit_rate) + "% vs worst single " + pct(worst) + "% + 5"});
  }
  if (lru && lfu && !lru->phases.empty() && lru->phases.size() == lfu->phases.size()) {
    std::uint64_t lg = 0, lh = 0, fg = 0, fh = 0;
    for (std::size_t i = 0; i < lru->phases.size(); ++i) {
      if (!lru->phases[i].lru_friendly) continue;
      lg += lru->phases[i].gets;
      lh += lru->phases[i].hits;
      fg += lfu->phases[i].gets;
      fh += lfu->phases[i].hits;
    }
    const double l = lg ? double(lh) / double(lg) : 0.0;
    const double f = fg ? double(fh) / double(fg) : 0.0;
    report.verdicts.push_back({"lru_wins_recency_phases", l > f,
                               "lru-only " + pct(l) + "% vs lfu-only " + pct(f) + "% on recency phases"});
  }
  return report;
}

std::string CompareReport::to_text() const {
  std::ostringstream os;
  os << "variant            hit_rate%   verbs";
  const std::size_t nphases = rows.empty() ? 0 : rows.front().phases.size();
  for (std::size_t i = 0; i < nphases; ++i) {
    os << "   p" << i << (rows.front().phases[i].lru_friendly ? "(rec)" : "(frq)");
  }
  os << "\n";
  for (const auto& r : rows) {
    std::string name = r.variant;
    name.resize(18, ' ');
    os << name << " " << pct(r.hit_rate);
    os << "   " << r.total_verbs;
    for (const auto& p : r.phases) os << "   " << pct(p.hit_rate());
    os << "\n";
  }
  for (const auto& v : verdicts) os << (v.passed ? "PASS " : "FAIL ") << v.name << "  (" << v.detail << ")\n";
  return os.str();
}

std::string CompareReport::to_json() const {
  nlohmann::ordered_json j;
  j["schema"] = kMetricsSchema;
  nlohmann::ordered_json rs = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    nlohmann::ordered_json row{{"variant", r.variant}, {"hit_rate", r.hit_rate}, {"total_verbs", r.total_verbs},
                               {"final_weights", r.final_weights}};
    nlohmann::ordered_json ph = nlohmann::ordered_json::array();
    for (const auto& p : r.phases) {
      ph.push_back({{"kind", p.lru_friendly ? "recency" : "frequency"}, {"hit_rate", p.hit_rate()}});
    }
    row["phases"] = ph;
    rs.push_back(row);
  }
  j["rows"] = rs;
  nlohmann::ordered_json vs = nlohmann::ordered_json::array();
  for (const auto& v : verdicts) vs.push_back({{"name", v.name}, {"passed", v.passed}, {"detail", v.detail}});
  j["verdicts"] = vs;
  return j.dump(2) + "\n";
}

}  // namespace dmcache
