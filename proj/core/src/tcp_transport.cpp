#include "dmcache/tcp_transport.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

namespace dmcache {

namespace {

void send_all(int fd, std::span<const std::byte> data) {
  std::size_t sent = 0;
  while (sent < data.size()) {
    const ssize_t n = ::send(fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) throw Error(ErrorCode::kTransport, std::string("send: ") + std::strerror(errno));
    sent += static_cast<std::size_t>(n);
  }
}

// Returns false on orderly shutdown before the first byte.
bool recv_all(int fd, std::span<std::byte> out) {
  std::size_t got = 0;
  while (got < out.size()) {
    const ssize_t n = ::recv(fd, out.data() + got, out.size() - got, 0);
    if (n < 0 && errno == EINTR) continue;
    if (n == 0 && got == 0) return false;
    if (n <= 0) throw Error(ErrorCode::kTransport, "connection closed mid-frame");
    got += static_cast<std::size_t>(n);
  }
  return true;
}

void set_nodelay(int fd) {
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

std::vector<std::byte> u64_payload(std::uint64_t v) {
  wire::ByteWriter w;
  w.u64(v);
  return w.take();
}

}  // namespace

// ---------------------------------------------------------------------------
// Server

TcpServer::TcpServer(MemoryNode& node, std::uint16_t port, const std::string& bind_host) : node_(node) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw Error(ErrorCode::kTransport, "socket failed");
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, bind_host.c_str(), &addr.sin_addr) != 1) {
    ::close(listen_fd_);
    throw Error(ErrorCode::kTransport, "bad bind address " + bind_host);
  }
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 || ::listen(listen_fd_, 64) != 0) {
    const std::string why = std::strerror(errno);
    ::close(listen_fd_);
    throw Error(ErrorCode::kTransport, "bind/listen: " + why);
  }
  socklen_t len = sizeof(addr);
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  acceptor_ = std::thread([this] { accept_loop(); });
}

TcpServer::~TcpServer() { stop(); }

void TcpServer::stop() {
  if (stopping_.exchange(true)) return;
  ::shutdown(listen_fd_, SHUT_RDWR);
  ::close(listen_fd_);
  if (acceptor_.joinable()) acceptor_.join();
  std::list<std::thread> workers;
  {
    std::lock_guard lock(mu_);
    for (int fd : client_fds_) ::shutdown(fd, SHUT_RDWR);
    workers.swap(workers_);
  }
  for (auto& t : workers) t.join();
}

void TcpServer::accept_loop() {
  while (!stopping_.load()) {
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR) continue;
      return;
    }
    set_nodelay(fd);
    std::lock_guard lock(mu_);
    if (stopping_.load()) {
      ::close(fd);
      return;
    }
    client_fds_.push_back(fd);
    workers_.emplace_back([this, fd] { serve(fd); });
  }
}

void TcpServer::serve(int fd) {
  try {
    std::byte header[wire::kRequestHeaderBytes];
    while (recv_all(fd, header)) {
      wire::Request req = wire::decode_request_header(header);
      req.payload.resize(wire::request_payload_bytes(req));
      if (!req.payload.empty() && !recv_all(fd, req.payload)) break;
      send_all(fd, wire::encode_reply(execute(node_, req)));
    }
  } catch (const Error&) {
    // Protocol violation or broken connection: drop the client.
  }
  std::lock_guard lock(mu_);
  client_fds_.remove(fd);
  ::close(fd);
}

wire::Reply TcpServer::execute(MemoryNode& node, const wire::Request& req) {
  try {
    wire::Reply reply;
    switch (req.op) {
      case wire::Op::kRead:
        if (req.len > wire::kMaxPayloadBytes) throw Error(ErrorCode::kProtocol, "read too large");
        reply.payload = node.read(req.addr, req.len);
        break;
      case wire::Op::kWrite:
        node.write(req.addr, req.payload);
        break;
      case wire::Op::kCas: {
        wire::ByteReader r(req.payload);
        const std::uint64_t expected = r.u64();
        const std::uint64_t desired = r.u64();
        reply.payload = u64_payload(node.cas(req.addr, expected, desired));
        break;
      }
      case wire::Op::kFaa: {
        wire::ByteReader r(req.payload);
        reply.payload = u64_payload(node.faa(req.addr, r.u64()));
        break;
      }
      case wire::Op::kAlloc:
        reply.payload = u64_payload(node.alloc(req.len));
        break;
      case wire::Op::kFree:
        node.free(req.addr);
        break;
      case wire::Op::kRpcWeights:
        reply.payload = wire::encode_penalties(node.rpc_apply_penalties(wire::decode_penalties(req.payload)));
        break;
    }
    return reply;
  } catch (const Error& e) {
    return wire::error_reply(e.code(), e.what());
  }
}

// ---------------------------------------------------------------------------
// Client

TcpTransport::TcpTransport(const std::string& host, std::uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string service = std::to_string(port);
  if (::getaddrinfo(host.c_str(), service.c_str(), &hints, &res) != 0 || res == nullptr) {
    throw Error(ErrorCode::kTransport, "cannot resolve " + host);
  }
  fd_ = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  const int rc = fd_ < 0 ? -1 : ::connect(fd_, res->ai_addr, res->ai_addrlen);
  ::freeaddrinfo(res);
  if (rc != 0) {
    const std::string why = std::strerror(errno);
    if (fd_ >= 0) ::close(fd_);
    throw Error(ErrorCode::kTransport, "connect " + host + ":" + service + ": " + why);
  }
  set_nodelay(fd_);
}

TcpTransport::~TcpTransport() {
  if (fd_ >= 0) ::close(fd_);
}

std::vector<std::byte> TcpTransport::call(const wire::Request& req) {
  send_all(fd_, wire::encode_request(req));
  std::byte header[wire::kReplyHeaderBytes];
  if (!recv_all(fd_, header)) throw Error(ErrorCode::kTransport, "server closed connection");
  wire::Status status;
  std::vector<std::byte> payload(wire::decode_reply_header(header, status));
  if (!payload.empty() && !recv_all(fd_, payload)) throw Error(ErrorCode::kTransport, "server closed connection");
  if (status == wire::Status::kErr) wire::raise_error_reply(payload);
  return payload;
}

void TcpTransport::do_read(std::uint64_t addr, std::span<std::byte> out) {
  const auto payload = call({wire::Op::kRead, addr, static_cast<std::uint32_t>(out.size()), {}});
  if (payload.size() != out.size()) throw Error(ErrorCode::kProtocol, "short READ reply");
  std::memcpy(out.data(), payload.data(), out.size());
}

void TcpTransport::do_write(std::uint64_t addr, std::span<const std::byte> data) {
  call({wire::Op::kWrite, addr, static_cast<std::uint32_t>(data.size()), {data.begin(), data.end()}});
}

std::uint64_t TcpTransport::do_cas(std::uint64_t addr, std::uint64_t expected, std::uint64_t desired) {
  wire::ByteWriter w;
  w.u64(expected);
  w.u64(desired);
  const auto payload = call({wire::Op::kCas, addr, 16, w.take()});
  return wire::ByteReader(payload).u64();
}

std::uint64_t TcpTransport::do_faa(std::uint64_t addr, std::uint64_t delta) {
  const auto payload = call({wire::Op::kFaa, addr, 8, u64_payload(delta)});
  return wire::ByteReader(payload).u64();
}

std::uint64_t TcpTransport::do_alloc(std::uint64_t size) {
  if (size > UINT32_MAX) throw Error(ErrorCode::kInvalidArgument, "alloc size exceeds u32 frame field");
  const auto payload = call({wire::Op::kAlloc, 0, static_cast<std::uint32_t>(size), {}});
  return wire::ByteReader(payload).u64();
}

void TcpTransport::do_free(std::uint64_t addr) { call({wire::Op::kFree, addr, 0, {}}); }

std::vector<double> TcpTransport::do_rpc_apply_penalties(std::span<const double> sums) {
  auto body = wire::encode_penalties(sums);
  const auto len = static_cast<std::uint32_t>(body.size());
  return wire::decode_penalties(call({wire::Op::kRpcWeights, 0, len, std::move(body)}));
}

}  // namespace dmcache
