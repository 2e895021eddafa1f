#include "dmcache/wire.hpp"

#include <bit>
#include <cstring>

namespace dmcache::wire {

void ByteWriter::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

double ByteReader::f64() { return std::bit_cast<double>(u64()); }

std::uint64_t ByteReader::get(int n) {
  if (remaining() < static_cast<std::size_t>(n)) throw Error(ErrorCode::kProtocol, "truncated frame");
  std::uint64_t v = 0;
  for (int i = 0; i < n; ++i) v |= std::uint64_t(std::to_integer<std::uint8_t>(in_[pos_ + i])) << (8 * i);
  pos_ += n;
  return v;
}

std::span<const std::byte> ByteReader::bytes(std::size_t n) {
  if (remaining() < n) throw Error(ErrorCode::kProtocol, "truncated frame");
  auto s = in_.subspan(pos_, n);
  pos_ += n;
  return s;
}

std::vector<std::byte> encode_request(const Request& req) {
  ByteWriter w;
  w.u16(kMagic);
  w.u8(static_cast<std::uint8_t>(req.op));
  w.u64(req.addr);
  w.u32(req.len);
  w.bytes(req.payload);
  return w.take();
}

Request decode_request_header(std::span<const std::byte> header) {
  ByteReader r(header);
  if (r.u16() != kMagic) throw Error(ErrorCode::kProtocol, "bad magic");
  Request req;
  const std::uint8_t op = r.u8();
  if (op < 1 || op > 7) throw Error(ErrorCode::kProtocol, "unknown op " + std::to_string(op));
  req.op = static_cast<Op>(op);
  req.addr = r.u64();
  req.len = r.u32();
  return req;
}

std::uint32_t request_payload_bytes(const Request& header) {
  switch (header.op) {
    case Op::kWrite:
    case Op::kRpcWeights:
      if (header.len > kMaxPayloadBytes) throw Error(ErrorCode::kProtocol, "payload too large");
      return header.len;
    case Op::kCas:
      if (header.len != 16) throw Error(ErrorCode::kProtocol, "CAS payload must be 16 bytes");
      return 16;
    case Op::kFaa:
      if (header.len != 8) throw Error(ErrorCode::kProtocol, "FAA payload must be 8 bytes");
      return 8;
    default:
      return 0;
  }
}

std::vector<std::byte> encode_reply(const Reply& reply) {
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(reply.status));
  w.u32(static_cast<std::uint32_t>(reply.payload.size()));
  w.bytes(reply.payload);
  return w.take();
}

std::uint32_t decode_reply_header(std::span<const std::byte> header, Status& status) {
  ByteReader r(header);
  const std::uint8_t s = r.u8();
  if (s > 1) throw Error(ErrorCode::kProtocol, "bad reply status");
  status = static_cast<Status>(s);
  const std::uint32_t len = r.u32();
  if (len > kMaxPayloadBytes) throw Error(ErrorCode::kProtocol, "reply too large");
  return len;
}

std::vector<std::byte> encode_penalties(std::span<const double> sums) {
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(sums.size()));
  for (double s : sums) w.f64(s);
  return w.take();
}

std::vector<double> decode_penalties(std::span<const std::byte> payload) {
  ByteReader r(payload);
  const std::uint32_t n = r.u32();
  if (r.remaining() != std::size_t{n} * 8) throw Error(ErrorCode::kProtocol, "penalty count mismatch");
  std::vector<double> out(n);
  for (auto& v : out) v = r.f64();
  return out;
}

Reply error_reply(ErrorCode code, const std::string& message) {
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(code));
  w.bytes(std::as_bytes(std::span(message.data(), message.size())));
  return Reply{Status::kErr, w.take()};
}

void raise_error_reply(std::span<const std::byte> payload) {
  if (payload.empty()) throw Error(ErrorCode::kProtocol, "empty error reply");
  const auto code = static_cast<ErrorCode>(std::to_integer<std::uint8_t>(payload[0]));
  std::string msg(reinterpret_cast<const char*>(payload.data()) + 1, payload.size() - 1);
  // The message already carries the "Code: " prefix from the server side.
  const auto name = std::string(error_code_name(code)) + ": ";
  if (msg.rfind(name, 0) == 0) msg.erase(0, name.size());
  throw Error(code, msg);
}

}  // namespace dmcache::wire
