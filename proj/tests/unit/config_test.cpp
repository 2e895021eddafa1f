#include <gtest/gtest.h>

#include <sstream>

#include "dmcache/config.hpp"
#include "dmcache/errors.hpp"

namespace dmcache {
namespace {

TEST(Config, DefaultsValidate) { EXPECT_NO_THROW(RunConfig{}.validate()); }

TEST(Config, RoundTrip) {
  RunConfig c;
  c.clients = 3;
  c.experts = {"LRU", "LFU", "GDSF"};
  c.lambda = 0.25;
  c.workload.distribution = Distribution::kPhase;
  c.workload.phase.scan_factor = 0.75;
  c.workload.phase.lru_first = false;
  c.output = "out/run one";
  std::istringstream in(serialize_config(c));
  EXPECT_EQ(parse_config(in), c);
}

TEST(Config, EveryKeySerialized) {
  const std::string text = "\n" + serialize_config(RunConfig{});
  for (const auto& k : config_keys()) {
    if (k == "workload.mix") continue;  // write-only shorthand
    EXPECT_NE(text.find("\n" + k + " ="), std::string::npos) << k;
  }
}

TEST(Config, CommentsAndLaterKeysWin) {
  std::istringstream in("# comment\nclients = 2\n\nclients = 5\nworkload.mix = B\n");
  const RunConfig c = parse_config(in);
  EXPECT_EQ(c.clients, 5u);
  EXPECT_EQ(c.workload.get_ratio, 0.95);
}

void expect_config_error(const std::string& text, const std::string& needle) {
  std::istringstream in(text);
  try {
    parse_config(in).validate();
    FAIL() << text;
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfig);
    EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
  }
}

TEST(Config, ErrorsNameTheField) {
  expect_config_error("bogus = 1\n", "bogus");
  expect_config_error("clients = many\n", "clients");
  expect_config_error("clients = 0\n", "clients");
  expect_config_error("sample_k = 0\n", "sample_k");
  expect_config_error("experts = LRU,NOPE\n", "experts");
  expect_config_error("workload.theta = 2\n", "theta");
  expect_config_error("clients 3\n", "line 1");
  expect_config_error("transport = carrier-pigeon\n", "transport");
}

TEST(Config, ApplyValue) {
  RunConfig c;
  apply_config_value(c, "cache_capacity_objects", "2500");
  apply_config_value(c, "adaptive", "off");
  EXPECT_EQ(c.cache_capacity_objects, 2500u);
  EXPECT_FALSE(c.adaptive);
  EXPECT_THROW(apply_config_value(c, "nope", "1"), Error);
}

TEST(Config, ResolvedPhaseSize) {
  RunConfig c;
  c.cache_capacity_objects = 700;
  EXPECT_EQ(c.resolved_workload().phase.cache_objects, 700u);
  c.workload.phase.cache_objects = 50;
  EXPECT_EQ(c.resolved_workload().phase.cache_objects, 50u);
  EXPECT_EQ(c.effective_history_len(), 700u);
}

TEST(Config, MissingFile) {
  try {
    load_config("/nonexistent/config.conf");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfig);
  }
}

}  // namespace
}  // namespace dmcache
