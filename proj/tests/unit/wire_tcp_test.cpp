#include <gtest/gtest.h>

#include <cstring>
#include <random>

#include "dmcache/errors.hpp"
#include "dmcache/memory_node.hpp"
#include "dmcache/tcp_transport.hpp"
#include "dmcache/transport.hpp"
#include "dmcache/wire.hpp"

namespace dmcache {
namespace {

std::vector<std::byte> bytes(std::initializer_list<int> v) {
  std::vector<std::byte> out;
  for (int b : v) out.push_back(std::byte(b));
  return out;
}

TEST(Wire, RequestGoldenBytes) {
  wire::Request r;
  r.op = wire::Op::kFaa;
  r.addr = 0x0102030405060708ull;
  r.len = 8;
  r.payload = bytes({1, 0, 0, 0, 0, 0, 0, 0});
  const auto enc = wire::encode_request(r);
  const auto want = bytes({0x70, 0xD1, 4, 8, 7, 6, 5, 4, 3, 2, 1, 8, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0});
  EXPECT_EQ(enc, want);
  const auto hdr = wire::decode_request_header(std::span(enc).first(wire::kRequestHeaderBytes));
  EXPECT_EQ(hdr.op, wire::Op::kFaa);
  EXPECT_EQ(hdr.addr, r.addr);
  EXPECT_EQ(hdr.len, 8u);
  EXPECT_EQ(wire::request_payload_bytes(hdr), 8u);
}

TEST(Wire, PayloadSizesPerOp) {
  wire::Request r;
  r.len = 40;
  r.op = wire::Op::kRead;
  EXPECT_EQ(wire::request_payload_bytes(r), 0u);
  r.op = wire::Op::kWrite;
  EXPECT_EQ(wire::request_payload_bytes(r), 40u);
  r.op = wire::Op::kCas;
  r.len = 16;
  EXPECT_EQ(wire::request_payload_bytes(r), 16u);
  r.op = wire::Op::kAlloc;
  r.len = 100;
  EXPECT_EQ(wire::request_payload_bytes(r), 0u);
}

TEST(Wire, BadHeaders) {
  auto enc = wire::encode_request({wire::Op::kRead, 0, 8, {}});
  enc[0] = std::byte{0};
  EXPECT_THROW(wire::decode_request_header(enc), Error);
  enc = wire::encode_request({wire::Op::kRead, 0, 8, {}});
  enc[2] = std::byte{9};
  EXPECT_THROW(wire::decode_request_header(enc), Error);
}

TEST(Wire, ReplyAndPenaltyRoundTrip) {
  wire::Reply rep{wire::Status::kOk, bytes({9, 8, 7})};
  const auto enc = wire::encode_reply(rep);
  ASSERT_EQ(enc.size(), wire::kReplyHeaderBytes + 3);
  wire::Status st = wire::Status::kErr;
  EXPECT_EQ(wire::decode_reply_header(std::span(enc).first(wire::kReplyHeaderBytes), st), 3u);
  EXPECT_EQ(st, wire::Status::kOk);
  const std::vector<double> sums{0.25, -1.5, 3e-300};
  const auto p = wire::encode_penalties(sums);
  EXPECT_EQ(p.size(), 4u + 8 * sums.size());
  EXPECT_EQ(wire::decode_penalties(p), sums);
}

TEST(Wire, ErrorReplyCarriesCode) {
  const auto rep = wire::error_reply(ErrorCode::kDoubleFree, "free of 0x40");
  try {
    wire::raise_error_reply(rep.payload);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDoubleFree);
  }
}

// Scripted sequence run against any transport; records every reply.
std::vector<std::string> script(Transport& t) {
  std::vector<std::string> out;
  auto note = [&](auto v) { out.push_back(std::to_string(v)); };
  auto attempt = [&](const std::function<void()>& fn) {
    try {
      fn();
      out.push_back("ok");
    } catch (const Error& e) {
      out.push_back(std::string(error_code_name(e.code())));
    }
  };
  t.write_word(8, 41);
  note(t.read_word(8));
  note(t.cas(8, 41, 42));
  note(t.cas(8, 41, 43));
  note(t.faa(16, 5));
  note(t.faa(16, 5));
  const auto a = t.alloc(100);
  note(a);
  std::vector<std::byte> blob(77);
  for (std::size_t i = 0; i < blob.size(); ++i) blob[i] = std::byte(i);
  t.write(a + 3, blob);
  const auto back = t.read(a + 3, 77);
  out.push_back(back == blob ? "blob" : "blob-mismatch");
  t.free(a);
  attempt([&] { t.free(a); });
  attempt([&] { t.read(1 << 20, 8); });
  attempt([&] { t.cas(12, 0, 1); });
  attempt([&] { t.rpc_apply_penalties(std::vector<double>{1.0}); });
  for (double w : t.rpc_apply_penalties(std::vector<double>{0.1, 0.0})) note(w);
  return out;
}

MemoryNode::Options small() {
  MemoryNode::Options o;
  o.capacity = 64 * 64;
  o.heap_base = 1024;
  o.num_experts = 2;
  return o;
}

TEST(Tcp, EquivalentToInProc) {
  MemoryNode a(small());
  MemoryNode b(small());
  InProcTransport local(a);
  TcpServer server(b, 0);
  TcpTransport remote("127.0.0.1", server.port());
  EXPECT_EQ(script(local), script(remote));
  EXPECT_EQ(local.stats(), remote.stats());
  EXPECT_EQ(a.stats(), b.stats());
  EXPECT_EQ(local.stats(), a.stats());
}

TEST(Tcp, ConcurrentClientsFaa) {
  MemoryNode node(small());
  TcpServer server(node, 0);
  std::vector<std::thread> ts;
  for (int i = 0; i < 3; ++i) {
    ts.emplace_back([&] {
      TcpTransport t("127.0.0.1", server.port());
      for (int j = 0; j < 500; ++j) t.faa(0, 1);
    });
  }
  for (auto& t : ts) t.join();
  InProcTransport check(node);
  EXPECT_EQ(check.read_word(0), 1500u);
}

TEST(Tcp, ConnectFailureIsTransportError) {
  std::uint16_t port = 0;
  {
    MemoryNode node(small());
    TcpServer server(node, 0);
    port = server.port();
  }
  try {
    TcpTransport t("127.0.0.1", port);
    t.read_word(0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTransport);
  }
}

}  // namespace
}  // namespace dmcache
