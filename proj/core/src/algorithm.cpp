#include "dmcache/algorithm.hpp"

#include <bit>
#include <cstring>

#include "dmcache/errors.hpp"

namespace dmcache {

std::uint64_t MetadataView::ext_u64(std::size_t offset) const {
  if (offset + 8 > ext.size()) throw Error(ErrorCode::kOutOfRange, "ext read past slice");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t(std::to_integer<std::uint8_t>(ext[offset + i])) << (8 * i);
  return v;
}

double MetadataView::ext_f64(std::size_t offset) const { return std::bit_cast<double>(ext_u64(offset)); }

void MetadataView::set_ext_u64(std::size_t offset, std::uint64_t v) {
  if (offset + 8 > ext.size()) throw Error(ErrorCode::kOutOfRange, "ext write past slice");
  for (int i = 0; i < 8; ++i) ext[offset + i] = static_cast<std::byte>(v >> (8 * i));
}

void MetadataView::set_ext_f64(std::size_t offset, double v) { set_ext_u64(offset, std::bit_cast<std::uint64_t>(v)); }

std::size_t AlgorithmRegistry::register_algorithm(AlgorithmSpec spec) {
  if (spec.name.empty()) throw Error(ErrorCode::kInvalidArgument, "algorithm name is empty");
  if (!spec.priority) throw Error(ErrorCode::kInvalidArgument, "algorithm '" + spec.name + "' has no priority");
  for (const auto& s : specs_) {
    if (s.name == spec.name) throw Error(ErrorCode::kDuplicateName, "algorithm '" + spec.name + "' already registered");
  }
  if (specs_.size() >= kMaxExperts) {
    throw Error(ErrorCode::kTooManyExperts, "at most " + std::to_string(kMaxExperts) + " experts");
  }
  if (ext_total_ + spec.ext.bytes > kMaxExtBytes) {
    throw Error(ErrorCode::kExtConflict, "extended header would exceed " + std::to_string(kMaxExtBytes) +
                                             " bytes with '" + spec.name + "'");
  }
  if (spec.ext.bytes % 8 != 0) {
    throw Error(ErrorCode::kExtConflict, "extended header slice of '" + spec.name + "' is not a multiple of 8");
  }
  offsets_.push_back(ext_total_);
  ext_total_ += spec.ext.bytes;
  specs_.push_back(std::move(spec));
  return specs_.size() - 1;
}

std::vector<std::string> AlgorithmRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& s : specs_) out.push_back(s.name);
  return out;
}

std::vector<std::byte> AlgorithmRegistry::init_ext(const MetadataView& base, std::span<const double> local_values) const {
  std::vector<std::byte> ext(ext_total_);
  for (std::size_t i = 0; i < specs_.size(); ++i) {
    const auto& s = specs_[i];
    if (s.ext.bytes == 0 || !s.ext.init) continue;
    MetadataView v = base;
    v.ext = std::span(ext).subspan(offsets_[i], s.ext.bytes);
    if (i < local_values.size()) v.local_value = local_values[i];
    s.ext.init(v);
  }
  return ext;
}

AlgorithmRegistry make_registry(const std::vector<std::string>& names) {
  AlgorithmRegistry reg;
  for (const auto& n : names) reg.register_algorithm(make_builtin(n));
  return reg;
}

}  // namespace dmcache
