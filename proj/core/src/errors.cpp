#include "dmcache/errors.hpp"

namespace dmcache {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kOutOfRange: return "OutOfRange";
    case ErrorCode::kMisaligned: return "Misaligned";
    case ErrorCode::kOutOfMemory: return "OutOfMemory";
    case ErrorCode::kDoubleFree: return "DoubleFree";
    case ErrorCode::kUnknownAddr: return "UnknownAddr";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kValueTooLarge: return "ValueTooLarge";
    case ErrorCode::kRetriesExhausted: return "RetriesExhausted";
    case ErrorCode::kEvictionStarvation: return "EvictionStarvation";
    case ErrorCode::kDuplicateName: return "DuplicateName";
    case ErrorCode::kExtConflict: return "ExtConflict";
    case ErrorCode::kTooManyExperts: return "TooManyExperts";
    case ErrorCode::kMalformedLine: return "MalformedLine";
    case ErrorCode::kTransport: return "Transport";
    case ErrorCode::kProtocol: return "Protocol";
    case ErrorCode::kConfig: return "Config";
  }
  return "Unknown";
}

}  // namespace dmcache
