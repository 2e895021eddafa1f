// dmcache_bench: run, compare, audit and serve from a flat key = value config.

#include <csignal>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "dmcache/config.hpp"
#include "dmcache/errors.hpp"
#include "dmcache/experiment.hpp"
#include "dmcache/runner.hpp"

namespace {

volatile std::sig_atomic_t g_stop = 0;

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("config", c.config_path, "Config file (key = value per line)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "Override seed and workload.seed");
  cmd->add_option("--out", c.out, "Output path prefix; writes <out>.json (and <out>.csv for run)");
  cmd->add_option("--set", c.overrides, "Extra key=value override, repeatable")
      ->expected(1)
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
}

dmcache::RunConfig load(const Common& c) {
  dmcache::RunConfig cfg = dmcache::load_config(c.config_path);
  for (const auto& kv : c.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw dmcache::Error(dmcache::ErrorCode::kConfig, "--set expects key=value, got '" + kv + "'");
    dmcache::apply_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (c.seed) {
    cfg.seed = *c.seed;
    cfg.workload.seed = *c.seed;
  }
  if (!c.out.empty()) cfg.output = c.out;
  cfg.validate();
  return cfg;
}

void write_file(const std::string& path, const std::string& body) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw dmcache::Error(dmcache::ErrorCode::kConfig, "output: cannot open " + path);
  f << body;
}

int cmd_run(const Common& c) {
  const dmcache::RunConfig cfg = load(c);
  dmcache::Deployment d(cfg);
  const dmcache::RunMetrics m = d.run("run");
  const std::string json = dmcache::metrics_to_json(m);
  if (cfg.output.empty()) {
    std::cout << json;
  } else {
    write_file(cfg.output + ".json", json);
    write_file(cfg.output + ".csv", dmcache::trajectory_csv(m));
    std::cout << "hit_rate " << m.hit_rate << "  gets " << m.gets << "  verbs " << m.verbs.total_verbs()
              << "\nwrote " << cfg.output << ".json, " << cfg.output << ".csv\n";
  }
  return 0;
}

int cmd_compare(const Common& c, const std::vector<std::string>& variants) {
  const dmcache::RunConfig cfg = load(c);
  const dmcache::CompareReport r = dmcache::run_compare(cfg, variants);
  std::cout << r.to_text();
  if (!cfg.output.empty()) write_file(cfg.output + ".json", r.to_json());
  return r.passed() ? 0 : 1;
}

int cmd_audit(const Common& c, bool inject) {
  const dmcache::RunConfig cfg = load(c);
  dmcache::Deployment d(cfg);
  const dmcache::RunMetrics m = d.run("audit");
  const dmcache::AuditReport r = d.audit(inject);
  std::cout << "ops " << m.ops_done << "  hit_rate " << m.hit_rate << "\n" << r.to_text();
  if (!cfg.output.empty()) write_file(cfg.output + ".json", dmcache::metrics_to_json(m));
  return r.passed() ? 0 : 1;
}

int cmd_serve(const Common& c, std::uint16_t port) {
  const dmcache::RunConfig cfg = load(c);
  const dmcache::AlgorithmRegistry reg = dmcache::make_registry(cfg.experts);
  const dmcache::PoolLayout layout = dmcache::plan_pool(cfg, reg);
  dmcache::MemoryNode node(layout.node_options(reg.size(), cfg.verb_delay_us));
  dmcache::TcpServer server(node, port, cfg.tcp_host);
  std::cout << "serving on " << cfg.tcp_host << ":" << server.port() << std::endl;
  std::signal(SIGINT, [](int) { g_stop = 1; });
  std::signal(SIGTERM, [](int) { g_stop = 1; });
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  server.stop();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Client-centric adaptive cache on a simulated disaggregated memory pool"};
  app.require_subcommand(1);

  Common run_opts, cmp_opts, audit_opts, serve_opts;
  auto* run = app.add_subcommand("run", "Run one workload and write metrics");
  add_common(run, run_opts);

  auto* compare = app.add_subcommand("compare", "Run variants on the same request sequence");
  add_common(compare, cmp_opts);
  std::vector<std::string> variants{"adaptive", "lru-only", "lfu-only"};
  compare->add_option("--variants", variants, "adaptive, lru-only, lfu-only, <algo>-only, oracle")->delimiter(',');

  auto* audit = app.add_subcommand("audit", "Run, then scan the pool for invariant violations");
  add_common(audit, audit_opts);
  bool inject = false;
  audit->add_flag("--inject-hash-fault", inject, "Corrupt one slot's hash before scanning");

  auto* serve = app.add_subcommand("serve", "Host a memory node over TCP sized for the config");
  add_common(serve, serve_opts);
  std::uint16_t port = 0;
  serve->add_option("--port", port, "Listen port (0: ephemeral)");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(run_opts);
    if (*compare) return cmd_compare(cmp_opts, variants);
    if (*audit) return cmd_audit(audit_opts, inject);
    if (*serve) return cmd_serve(serve_opts, port);
  } catch (const dmcache::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
