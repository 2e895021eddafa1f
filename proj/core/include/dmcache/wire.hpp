#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dmcache/errors.hpp"

// Little-endian framing for the memory-node protocol.
//   request = magic:u16 | op:u8 | addr:u64 | len:u32 | payload
//   reply   = status:u8 | len:u32 | payload
namespace dmcache::wire {

inline constexpr std::uint16_t kMagic = 0xD170;
inline constexpr std::size_t kRequestHeaderBytes = 15;
inline constexpr std::size_t kReplyHeaderBytes = 5;
inline constexpr std::uint32_t kMaxPayloadBytes = 64u << 20;

enum class Op : std::uint8_t {
  kRead = 1,
  kWrite = 2,
  kCas = 3,
  kFaa = 4,
  kAlloc = 5,
  kFree = 6,
  kRpcWeights = 7,
};

enum class Status : std::uint8_t { kOk = 0, kErr = 1 };

/// `len` is the READ length, WRITE payload length, 16 for CAS, 8 for FAA,
/// the requested size for ALLOC, 0 for FREE and the payload length for
/// RPC_WEIGHTS.
struct Request {
  Op op = Op::kRead;
  std::uint64_t addr = 0;
  std::uint32_t len = 0;
  std::vector<std::byte> payload;
};

/// Error replies carry `code:u8 | message` as payload.
struct Reply {
  Status status = Status::kOk;
  std::vector<std::byte> payload;
};

class ByteWriter {
 public:
  void u8(std::uint8_t v) { out_.push_back(std::byte{v}); }
  void u16(std::uint16_t v) { put(v, 2); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f64(double v);
  void bytes(std::span<const std::byte> b) { out_.insert(out_.end(), b.begin(), b.end()); }
  std::vector<std::byte> take() { return std::move(out_); }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.push_back(std::byte(static_cast<std::uint8_t>(v >> (8 * i))));
  }
  std::vector<std::byte> out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::byte> in) : in_(in) {}
  std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  double f64();
  std::span<const std::byte> bytes(std::size_t n);
  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  std::uint64_t get(int n);
  std::span<const std::byte> in_;
  std::size_t pos_ = 0;
};

std::vector<std::byte> encode_request(const Request& req);
/// Decodes a 15-byte header; the payload length follows from op and len.
Request decode_request_header(std::span<const std::byte> header);
std::uint32_t request_payload_bytes(const Request& header);

std::vector<std::byte> encode_reply(const Reply& reply);
/// Returns the payload length announced by a 5-byte reply header.
std::uint32_t decode_reply_header(std::span<const std::byte> header, Status& status);

std::vector<std::byte> encode_penalties(std::span<const double> sums);
std::vector<double> decode_penalties(std::span<const std::byte> payload);

Reply error_reply(ErrorCode code, const std::string& message);
/// Throws the Error carried by an error reply.
[[noreturn]] void raise_error_reply(std::span<const std::byte> payload);

}  // namespace dmcache::wire
