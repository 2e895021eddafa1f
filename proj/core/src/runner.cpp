#include "dmcache/runner.hpp"

#include <barrier>
#include <chrono>
#include <exception>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "dmcache/errors.hpp"

namespace dmcache {

namespace {

struct StreamOutcome {
  std::uint64_t gets = 0;
  std::uint64_t hits = 0;
  std::uint64_t sets = 0;
  std::uint64_t ops = 0;
  double penalty_us = 0.0;
  std::vector<TrajectoryPoint> trajectory;
  std::vector<PhaseHitRate> phases;
};

void replay(CacheClient& client, const std::vector<Request>& stream, const RunOptions& opts, bool record,
            StreamOutcome& out) {
  std::string value;
  auto value_of = [&](std::uint32_t n) -> const std::string& {
    if (value.size() != n) value.assign(n, 'v');
    return value;
  };
  if (record) {
    for (const PhaseRange& r : opts.phases) out.phases.push_back({r.lru_friendly, r.begin, r.end, 0, 0});
  }
  std::size_t phase = 0;
  std::uint64_t window_gets = 0;
  std::uint64_t window_hits = 0;
  std::uint64_t measured_ops = 0;

  for (std::size_t i = 0; i < stream.size(); ++i) {
    const Request& r = stream[i];
    const bool measured = i >= opts.measure_from;
    ++out.ops;
    if (r.op == Op::kSet) {
      client.set(r.key, value_of(r.value_size ? r.value_size : opts.default_value_bytes));
      ++out.sets;
    } else {
      const bool hit = client.get(r.key).has_value();
      if (!hit) {
        if (opts.penalty_mode == PenaltyMode::kSleep) {
          std::this_thread::sleep_for(std::chrono::microseconds(opts.miss_penalty_us));
        }
        out.penalty_us += opts.miss_penalty_us;
        const std::uint32_t n = r.value_size ? r.value_size : opts.default_value_bytes;
        client.observe_fetch(n, opts.miss_penalty_us, opts.miss_penalty_us);
        client.set(r.key, value_of(n));
        ++out.sets;
      }
      if (measured) {
        ++out.gets;
        out.hits += hit;
        ++window_gets;
        window_hits += hit;
      }
      if (record) {
        while (phase < out.phases.size() && i >= out.phases[phase].end) ++phase;
        if (phase < out.phases.size() && i >= out.phases[phase].begin) {
          ++out.phases[phase].gets;
          out.phases[phase].hits += hit;
        }
      }
    }
    if (record && measured && ++measured_ops % opts.trajectory_every == 0) {
      TrajectoryPoint p;
      p.op = i + 1;
      p.hit_rate = out.gets ? double(out.hits) / double(out.gets) : 0.0;
      p.window_hit_rate = window_gets ? double(window_hits) / double(window_gets) : 0.0;
      p.weights = client.experts().weights();
      out.trajectory.push_back(std::move(p));
      window_gets = window_hits = 0;
    }
  }
  client.fc_flush_all();
  if (client.options().adaptive && client.experts().updates_since_flush() > 0) client.flush_penalties();
}

void load(CacheClient& client, const std::vector<Request>& stream, const RunOptions& opts) {
  std::string value;
  for (const Request& r : stream) {
    const std::uint32_t n = r.value_size ? r.value_size : opts.default_value_bytes;
    if (value.size() != n) value.assign(n, 'v');
    client.set(r.key, value);
  }
}

}  // namespace

RunMetrics run_streams(std::span<CacheClient* const> clients, const std::vector<std::vector<Request>>& loads,
                       const std::vector<std::vector<Request>>& streams, const RunOptions& opts) {
  if (clients.empty() || streams.size() != clients.size() || (!loads.empty() && loads.size() != clients.size())) {
    throw Error(ErrorCode::kInvalidArgument, "need one stream (and one load stream, if any) per client");
  }
  if (opts.trajectory_every == 0) throw Error(ErrorCode::kInvalidArgument, "trajectory_every must be positive");
  std::vector<StreamOutcome> outcomes(clients.size());
  std::vector<std::exception_ptr> errors(clients.size());
  std::vector<double> wall(clients.size(), 0.0);
  const auto start = std::chrono::steady_clock::now();

  if (clients.size() == 1) {
    if (!loads.empty()) load(*clients[0], loads[0], opts);
    const auto t0 = std::chrono::steady_clock::now();
    replay(*clients[0], streams[0], opts, true, outcomes[0]);
    wall[0] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  } else {
    std::barrier sync(static_cast<std::ptrdiff_t>(clients.size()));
    std::vector<std::thread> threads;
    for (std::size_t i = 0; i < clients.size(); ++i) {
      threads.emplace_back([&, i] {
        try {
          if (!loads.empty()) load(*clients[i], loads[i], opts);
        } catch (...) {
          errors[i] = std::current_exception();
        }
        sync.arrive_and_wait();
        if (errors[i]) return;
        try {
          const auto t0 = std::chrono::steady_clock::now();
          replay(*clients[i], streams[i], opts, i == 0, outcomes[i]);
          wall[i] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        } catch (...) {
          errors[i] = std::current_exception();
        }
      });
    }
    for (auto& t : threads) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  RunMetrics m;
  m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  double worst = 0.0;
  for (std::size_t i = 0; i < clients.size(); ++i) {
    const StreamOutcome& o = outcomes[i];
    m.gets += o.gets;
    m.hits += o.hits;
    m.sets += o.sets;
    m.ops_done += o.ops;
    m.verbs += clients[i]->transport().stats();
    m.client += clients[i]->stats();
    worst = std::max(worst, wall[i] + o.penalty_us / 1e6);
  }
  m.misses = m.gets - m.hits;
  m.hit_rate = m.gets ? double(m.hits) / double(m.gets) : 0.0;
  m.ops_per_sec = m.wall_seconds > 0 ? double(m.ops_done) / m.wall_seconds : 0.0;
  m.penalized_seconds = opts.penalty_mode == PenaltyMode::kSleep ? m.wall_seconds : worst;
  m.trajectory = std::move(outcomes[0].trajectory);
  m.phases = std::move(outcomes[0].phases);
  m.final_weights = clients[0]->experts().weights();
  return m;
}

RunMetrics run_workload(const WorkloadSpec& spec, std::span<CacheClient* const> clients, RunOptions opts) {
  const auto n = static_cast<std::uint32_t>(clients.size());
  std::vector<std::vector<Request>> loads;
  std::vector<std::vector<Request>> streams;
  for (std::uint32_t i = 0; i < n; ++i) {
    if (spec.load) loads.push_back(load_stream(spec, i, n));
    streams.push_back(generate_stream(spec, i, n));
  }
  opts.miss_penalty_us = spec.miss_penalty_us;
  opts.default_value_bytes = spec.value_bytes;
  opts.measure_from = spec.warmup_ops / n;
  if (spec.distribution == Distribution::kPhase) opts.phases = phase_ranges(spec.phase);
  return run_streams(clients, loads, streams, opts);
}

std::string metrics_to_json(const RunMetrics& m, bool include_wall) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["schema"] = m.schema;
  j["variant"] = m.variant;
  j["hit_rate"] = m.hit_rate;
  j["gets"] = m.gets;
  j["hits"] = m.hits;
  j["misses"] = m.misses;
  j["sets"] = m.sets;
  j["ops_done"] = m.ops_done;
  if (include_wall) {
    j["wall_seconds"] = m.wall_seconds;
    j["ops_per_sec"] = m.ops_per_sec;
    j["penalized_seconds"] = m.penalized_seconds;
  }
  j["verbs"] = {{"reads", m.verbs.reads},     {"writes", m.verbs.writes}, {"cas", m.verbs.cas},
                {"faa", m.verbs.faa},         {"allocs", m.verbs.allocs}, {"frees", m.verbs.frees},
                {"rpcs", m.verbs.rpcs},       {"bytes_read", m.verbs.bytes_read},
                {"bytes_written", m.verbs.bytes_written}, {"total", m.verbs.total_verbs()}};
  const ClientStats& c = m.client;
  j["client"] = {{"inserts", c.inserts},
                 {"overwrites", c.overwrites},
                 {"accesses", c.accesses},
                 {"evictions", c.evictions},
                 {"bucket_evictions", c.bucket_evictions},
                 {"history_overwrites", c.history_overwrites},
                 {"evict_races", c.evict_races},
                 {"cas_retries", c.cas_retries},
                 {"duplicates_removed", c.duplicates_removed},
                 {"regrets", c.regrets},
                 {"expired_matches", c.expired_matches},
                 {"lost_bitmaps", c.lost_bitmaps},
                 {"counter_refreshes", c.counter_refreshes},
                 {"weight_flushes", c.weight_flushes},
                 {"fc_flushes", c.fc_flushes},
                 {"history_faas", c.history_faas}};
  j["experts"] = m.experts;
  j["final_weights"] = m.final_weights;
  j["metadata_bytes"] = m.metadata_bytes;
  j["cache_capacity_objects"] = m.cache_capacity_objects;
  j["history_len"] = m.history_len;
  ordered_json phases = ordered_json::array();
  for (const auto& p : m.phases) {
    phases.push_back({{"kind", p.lru_friendly ? "recency" : "frequency"},
                      {"begin", p.begin},
                      {"end", p.end},
                      {"gets", p.gets},
                      {"hits", p.hits},
                      {"hit_rate", p.hit_rate()}});
  }
  j["phases"] = phases;
  j["trajectory_points"] = m.trajectory.size();
  return j.dump(2) + "\n";
}

std::string trajectory_csv(const RunMetrics& m) {
  std::ostringstream os;
  os << "# schema=" << m.schema << "\n";
  os << "op,hit_rate,window_hit_rate";
  for (std::size_t i = 0; i < m.experts.size(); ++i) os << ",w_" << m.experts[i];
  os << "\n";
  os.precision(10);
  for (const auto& p : m.trajectory) {
    os << p.op << "," << p.hit_rate << "," << p.window_hit_rate;
    for (double w : p.weights) os << "," << w;
    os << "\n";
  }
  return os.str();
}

}  // namespace dmcache
