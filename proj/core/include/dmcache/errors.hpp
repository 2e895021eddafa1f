#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace dmcache {

enum class ErrorCode : std::uint8_t {
  kOutOfRange = 1,
  kMisaligned = 2,
  kOutOfMemory = 3,
  kDoubleFree = 4,
  kUnknownAddr = 5,
  kDimensionMismatch = 6,
  kInvalidArgument = 7,
  kValueTooLarge = 8,
  kRetriesExhausted = 9,
  kEvictionStarvation = 10,
  kDuplicateName = 11,
  kExtConflict = 12,
  kTooManyExperts = 13,
  kMalformedLine = 14,
  kTransport = 15,
  kProtocol = 16,
  kConfig = 17,
};

std::string_view error_code_name(ErrorCode code);

/// Every failure surfaced by the library. The code survives a trip over the
/// TCP transport, so callers can branch on it regardless of transport.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace dmcache
