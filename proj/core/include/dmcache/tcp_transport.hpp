#pragma once

#include <atomic>
#include <cstdint>
#include <list>
#include <mutex>
#include <string>
#include <thread>

#include "dmcache/memory_node.hpp"
#include "dmcache/transport.hpp"
#include "dmcache/wire.hpp"

namespace dmcache {

/// Serves a MemoryNode over TCP, one thread per connection.
class TcpServer {
 public:
  /// port 0 binds an ephemeral port; see port().
  TcpServer(MemoryNode& node, std::uint16_t port, const std::string& bind_host = "127.0.0.1");
  ~TcpServer();

  TcpServer(const TcpServer&) = delete;
  TcpServer& operator=(const TcpServer&) = delete;

  std::uint16_t port() const { return port_; }
  void stop();

  /// Executes one decoded request against the node. Exposed for tests.
  static wire::Reply execute(MemoryNode& node, const wire::Request& req);

 private:
  void accept_loop();
  void serve(int fd);

  MemoryNode& node_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> stopping_{false};
  std::thread acceptor_;
  std::mutex mu_;
  std::list<std::thread> workers_;
  std::list<int> client_fds_;
};

class TcpTransport final : public Transport {
 public:
  TcpTransport(const std::string& host, std::uint16_t port);
  ~TcpTransport() override;

  TcpTransport(const TcpTransport&) = delete;
  TcpTransport& operator=(const TcpTransport&) = delete;

 protected:
  void do_read(std::uint64_t addr, std::span<std::byte> out) override;
  void do_write(std::uint64_t addr, std::span<const std::byte> data) override;
  std::uint64_t do_cas(std::uint64_t addr, std::uint64_t expected, std::uint64_t desired) override;
  std::uint64_t do_faa(std::uint64_t addr, std::uint64_t delta) override;
  std::uint64_t do_alloc(std::uint64_t size) override;
  void do_free(std::uint64_t addr) override;
  std::vector<double> do_rpc_apply_penalties(std::span<const double> sums) override;

 private:
  std::vector<std::byte> call(const wire::Request& req);

  int fd_ = -1;
};

}  // namespace dmcache
