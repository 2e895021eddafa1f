#include "dmcache/cache_client.hpp"

#include <algorithm>
#include <cmath>

#include "dmcache/errors.hpp"
#include "dmcache/history.hpp"
#include "dmcache/object_codec.hpp"

namespace dmcache {

ClientStats& ClientStats::operator+=(const ClientStats& o) {
  gets += o.gets;
  hits += o.hits;
  misses += o.misses;
  sets += o.sets;
  inserts += o.inserts;
  overwrites += o.overwrites;
  accesses += o.accesses;
  evictions += o.evictions;
  bucket_evictions += o.bucket_evictions;
  history_overwrites += o.history_overwrites;
  evict_races += o.evict_races;
  cas_retries += o.cas_retries;
  duplicates_removed += o.duplicates_removed;
  regrets += o.regrets;
  expired_matches += o.expired_matches;
  lost_bitmaps += o.lost_bitmaps;
  counter_refreshes += o.counter_refreshes;
  weight_flushes += o.weight_flushes;
  fc_flushes += o.fc_flushes;
  history_faas += o.history_faas;
  return *this;
}

namespace {

std::uint64_t object_bytes(const SlotAtomic& a) {
  return std::uint64_t{a.size == kChainedSize ? kMaxSegmentBlocks : a.size} * kBlockBytes;
}

}  // namespace

CacheClient::CacheClient(Transport& transport, const PoolLayout& layout, const AlgorithmRegistry& registry,
                         Clock& clock, ClientOptions options)
    : t_(transport),
      layout_(layout),
      table_(layout.table, options.hash_seed),
      registry_(registry),
      clock_(clock),
      opts_(options),
      experts_(registry.size(), options.lambda, discount_rate(options.cache_objects), options.batch_size),
      fc_(options.fc_threshold, options.fc_capacity_bytes),
      local_values_(registry.size(), 0.0),
      rng_(options.seed),
      history_len_(options.history_len ? options.history_len : options.cache_objects),
      expert_mask_(registry.size() >= 32 ? 0xFFFFFFFFu : (1u << registry.size()) - 1) {
  if (opts_.sample_k == 0) throw Error(ErrorCode::kConfig, "sample_k must be positive");
  live_share_ = std::clamp(double(opts_.cache_objects) / double(layout.table.total_slots()), 0.02, 1.0);
  if (history_len_ == 0 || history_len_ > history_modulus() / 2) {
    throw Error(ErrorCode::kConfig, "history length must be in [1, 2^(bits-1)]");
  }
}

HistoryWindow CacheClient::window() const { return {cached_counter_ & history_mask(), history_len_}; }

MetadataView CacheClient::base_view(const Slot& s, std::uint64_t now) const {
  MetadataView v;
  v.size = object_bytes(s.atomic);
  v.insert_ts = s.meta.insert_ts;
  v.last_ts = s.meta.last_ts;
  v.freq = s.meta.freq;
  v.hash = s.meta.hash;
  const LocalEstimate est = local_info_.estimate(v.size);
  v.latency = est.latency;
  v.cost = est.cost;
  v.now = now;
  return v;
}

// ---------------------------------------------------------------- Get

std::optional<std::string> CacheClient::get(std::string_view key) {
  if (key.empty()) throw Error(ErrorCode::kInvalidArgument, "empty key");
  ++ops_;
  ++stats_.gets;
  const std::uint64_t now = clock_.now();
  SearchResult sr = table_.search(t_, key, window());
  for (std::uint32_t retry = 0; sr.raced && !sr.found && retry < opts_.max_cas_retries; ++retry) {
    ++stats_.cas_retries;
    sr = table_.search(t_, key, window());
  }
  if (sr.found) {
    auto parts = parse_object(sr.object);
    std::string value(parts->value);
    ++stats_.hits;
    on_hit(*sr.found, key, parts->ext, now);
    return value;
  }
  ++stats_.misses;
  if (opts_.adaptive) collect_regrets(sr.history_matches);
  return std::nullopt;
}

void CacheClient::on_hit(const Slot& slot, std::string_view key, std::span<const std::byte> ext_in,
                         std::uint64_t now) {
  MetadataView v = base_view(slot, now);
  v.freq = slot.meta.freq + fc_.pending(key) + 1;
  std::vector<std::byte> ext(ext_in.begin(), ext_in.end());
  bool ext_dirty = false;
  if (registry_.ext_bytes() > 0 && ext.size() == registry_.ext_bytes()) {
    for (std::size_t i = 0; i < registry_.size(); ++i) {
      const AlgorithmSpec& spec = registry_.at(i);
      if (spec.ext.bytes == 0 || !spec.update) continue;
      MetadataView ev = v;
      ev.local_value = local_values_[i];
      ev.ext = std::span(ext).subspan(registry_.ext_offset(i), spec.ext.bytes);
      spec.update(ev);
      ext_dirty = true;
    }
  }
  if (slot.install_pending()) {
    // Most likely a late history WRITE landed on this object; restore a
    // timestamp so it can be evicted again.
    const auto ts = encode_metadata({now, now, 0, 0});
    t_.write(slot.addr + kInsertTsOffset, std::span(ts).first(16));
  } else {
    t_.write_word(slot.addr + kLastTsOffset, now);
  }
  fc_record(key, slot.addr);
  // Extended header sits right after its 2-byte length at the object start.
  if (ext_dirty) t_.write(slot.atomic.pointer + 2, ext);
}

void CacheClient::refresh_counter() {
  cached_counter_ = t_.read_word(layout_.counter_addr);
  last_refresh_op_ = ops_;
  ++stats_.counter_refreshes;
}

void CacheClient::collect_regrets(const std::vector<Slot>& matches) {
  if (matches.empty()) return;
  bool refresh = ops_ - last_refresh_op_ >= opts_.counter_refresh_ops;
  for (const Slot& m : matches) {
    if (history_age(cached_counter_, m.atomic.pointer) > history_modulus() / 2) refresh = true;
  }
  if (refresh) refresh_counter();
  for (const Slot& m : matches) {
    if (!m.bitmap_intact()) {
      ++stats_.lost_bitmaps;
      continue;
    }
    const std::uint32_t bmap = m.expert_bmap() & expert_mask_;
    if (bmap == 0) continue;
    std::uint64_t age = history_age(cached_counter_, m.atomic.pointer);
    if (age > history_modulus() / 2) age = 1;  // handed out after our READ
    if (age > history_len_) {
      ++stats_.expired_matches;
      continue;
    }
    ++stats_.regrets;
    if (experts_.collect_regret(bmap, age - 1)) flush_penalties();
  }
}

bool CacheClient::flush_penalties() {
  if (!experts_.flush(t_)) return false;
  ++stats_.weight_flushes;
  return true;
}

// ---------------------------------------------------------------- FC cache

std::optional<std::uint64_t> CacheClient::fc_record(std::string_view key, std::uint64_t slot_addr) {
  ++stats_.accesses;
  FcRecordResult r = fc_.record(key, slot_addr);
  for (const FcFlush& f : r.flushes) {
    t_.faa(f.slot_addr + kFreqOffset, f.delta);
    ++stats_.fc_flushes;
  }
  return r.own_delta;
}

std::size_t CacheClient::fc_flush_all() {
  const auto flushes = fc_.drain();
  for (const FcFlush& f : flushes) {
    t_.faa(f.slot_addr + kFreqOffset, f.delta);
    ++stats_.fc_flushes;
  }
  return flushes.size();
}

void CacheClient::observe_fetch(std::uint64_t size_bytes, double latency, double cost) {
  local_info_.observe(size_bytes, latency, cost);
}

// ---------------------------------------------------------------- Set

std::uint64_t CacheClient::alloc_with_eviction(std::uint64_t bytes) {
  for (std::uint32_t evicted = 0;; ++evicted) {
    try {
      return t_.alloc(bytes);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kOutOfMemory || evicted >= opts_.max_evictions_per_alloc) throw;
    }
    evict_one();
  }
}

std::vector<Allocation> CacheClient::allocate_object(std::uint64_t stream_bytes) {
  std::vector<Allocation> segs;
  try {
    for (std::uint64_t blocks : plan_segments(stream_bytes)) {
      const std::uint64_t bytes = blocks * kBlockBytes;
      segs.push_back({alloc_with_eviction(bytes), bytes});
    }
  } catch (...) {
    free_allocations(segs);
    throw;
  }
  return segs;
}

void CacheClient::free_allocations(const std::vector<Allocation>& segs) {
  for (const Allocation& a : segs) t_.free(a.addr);
}

void CacheClient::write_object(const std::vector<Allocation>& segs, std::span<const std::byte> stream) {
  if (segs.size() == 1) {
    t_.write(segs[0].addr, stream);
    return;
  }
  std::size_t off = 0;
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const bool has_link = i + 1 < segs.size();
    std::vector<std::byte> buf(segs[i].bytes);
    const std::size_t payload = segment_payload_bytes(segs[i].bytes / kBlockBytes, has_link);
    const std::size_t n = std::min(payload, stream.size() - off);
    std::copy_n(stream.begin() + off, n, buf.begin());
    off += n;
    if (has_link) {
      const std::uint64_t link = encode_link(segs[i + 1].addr, segs[i + 1].bytes / kBlockBytes);
      for (std::size_t b = 0; b < kLinkBytes; ++b) buf[payload + b] = static_cast<std::byte>(link >> (8 * b));
    }
    t_.write(segs[i].addr, buf);
  }
}

void CacheClient::set(std::string_view key, std::string_view value) {
  if (key.empty()) throw Error(ErrorCode::kInvalidArgument, "empty key");
  ++ops_;
  ++stats_.sets;
  const std::uint64_t now = clock_.now();
  const std::uint64_t h = table_.hash(key);
  const std::uint8_t fp = fingerprint(h);

  const std::uint64_t stream_bytes = object_stream_bytes(registry_.ext_bytes(), key.size(), value.size());
  MetadataView init;
  init.size = (stream_bytes + kBlockBytes - 1) / kBlockBytes * kBlockBytes;
  init.insert_ts = init.last_ts = init.now = now;
  init.freq = 1;
  init.hash = h;
  const std::vector<std::byte> stream = encode_object(registry_.init_ext(init, local_values_), key, value);

  auto place = [&] {
    std::vector<Allocation> segs = allocate_object(stream.size());
    write_object(segs, stream);
    return segs;
  };
  std::vector<Allocation> segs = place();
  auto desired = [&] {
    const std::uint8_t size =
        segs.size() == 1 ? size_field_for_blocks(segs[0].bytes / kBlockBytes) : kChainedSize;
    return SlotAtomic{fp, size, segs[0].addr};
  };

  // Why each attempt was abandoned, for the error message.
  std::uint32_t raced = 0, lost_cas = 0, no_target = 0, lost_unique = 0;
  for (std::uint32_t attempt = 0; attempt <= opts_.max_cas_retries; ++attempt) {
    if (attempt > 0) ++stats_.cas_retries;
    SearchResult sr = table_.search(t_, key, window());
    if (sr.raced && !sr.found) {
      ++raced;
      continue;
    }

    if (sr.found) {
      const Slot old = *sr.found;
      InstallMetadata meta{InstallMetadata::Kind::kTimestamps, {now, now, 0, h}};
      if (!table_.install_slot(t_, old, desired(), meta).success) {
        ++lost_cas;
        continue;
      }
      ++stats_.overwrites;
      fc_record(key, old.addr);
      for (const Allocation& seg : table_.object_segments(t_, old.atomic)) t_.free(seg.addr);
      return;
    }

    std::optional<Target> target;
    if (sr.free_slot && sr.free_slot_virgin) {
      target = Target{*sr.free_slot, true, false, false};
    } else if (!sr.history_matches.empty()) {
      // Reusing the key's own history entry retires the regret it just produced.
      target = Target{sr.history_matches.front(), false, false, false};
    } else if (sr.free_slot) {
      target = Target{*sr.free_slot, false, false, false};
    } else {
      target = overflow_target(sr.bucket, now);
    }
    if (!target) {
      ++no_target;
      continue;
    }

    const SlotAtomic want = desired();
    InstallMetadata meta{InstallMetadata::Kind::kFull, {now, now, 1, h}};
    if (!table_.install_slot(t_, target->slot, want, meta).success) {
      ++lost_cas;
      continue;
    }
    ++stats_.accesses;
    ++stats_.inserts;
    if (target->history_overwrite) ++stats_.history_overwrites;
    if (target->live_victim) {
      for (const Allocation& seg : table_.object_segments(t_, target->slot.atomic)) t_.free(seg.addr);
      ++stats_.evictions;
      ++stats_.bucket_evictions;
    }
    if (target->virgin || verify_unique(table_.bucket_for_hash(h).index, key, target->slot.addr,
                                        encode_atomic(want))) {
      return;
    }
    // A lower-indexed copy of the key won; ours is gone. Store the value again
    // as an overwrite of the survivor.
    ++lost_unique;
    segs = place();
  }
  free_allocations(segs);
  throw Error(ErrorCode::kRetriesExhausted,
              "set gave up after " + std::to_string(opts_.max_cas_retries) + " retries (raced " +
                  std::to_string(raced) + ", lost cas " + std::to_string(lost_cas) + ", no target " +
                  std::to_string(no_target) + ", lost uniqueness " + std::to_string(lost_unique) + ")");
}

bool CacheClient::verify_unique(std::uint64_t bucket_index, std::string_view key, std::uint64_t our_addr,
                                std::uint64_t our_word) {
  const std::uint8_t fp = fingerprint(table_.hash(key));
  const std::uint64_t tomb = encode_atomic({fp, kHistorySize, tombstone_id()});
  for (int round = 0; round < 4; ++round) {
    const auto bucket = table_.read_bucket(t_, bucket_index);
    std::vector<Slot> copies;
    for (const Slot& s : bucket) {
      if (!s.atomic.live() || s.atomic.fp != fp) continue;
      if (s.addr == our_addr && s.word == our_word) {
        copies.push_back(s);
        continue;
      }
      auto stream = table_.read_object(t_, s.atomic);
      auto parts = parse_object(stream);
      if (parts && parts->key == key) copies.push_back(s);
    }
    const bool ours_present =
        std::any_of(copies.begin(), copies.end(), [&](const Slot& s) { return s.addr == our_addr && s.word == our_word; });
    if (copies.size() <= 1) return true;
    // Slots come back in address order; the first copy survives.
    bool settled = true;
    bool ours_removed = false;
    for (std::size_t i = 1; i < copies.size(); ++i) {
      const Slot& c = copies[i];
      if (t_.cas(c.addr, c.word, tomb) != c.word) {
        settled = false;
        continue;
      }
      t_.write_word(c.addr + kInsertTsOffset, encode_history_bitmap(tombstone_id(), 0));
      for (const Allocation& seg : table_.object_segments(t_, c.atomic)) t_.free(seg.addr);
      ++stats_.duplicates_removed;
      if (c.addr == our_addr && c.word == our_word) ours_removed = true;
    }
    if (ours_removed) return false;
    if (settled || !ours_present) return true;
  }
  return true;
}

// ---------------------------------------------------------------- eviction

SampledObject CacheClient::sampled(const Slot& s, std::uint64_t now) {
  SampledObject o{s, base_view(s, now), {}};
  o.view.freq += fc_.pending_for_slot(s.addr);
  if (registry_.ext_bytes() > 0) {
    o.ext.assign(registry_.ext_bytes(), std::byte{0});
    const auto head = t_.read(s.atomic.pointer, static_cast<std::uint32_t>(2 + registry_.ext_bytes()));
    const std::size_t len = std::to_integer<std::size_t>(head[0]) | std::to_integer<std::size_t>(head[1]) << 8;
    if (len == registry_.ext_bytes()) std::copy(head.begin() + 2, head.end(), o.ext.begin());
  }
  return o;
}

std::vector<SampledObject> CacheClient::sample_live() {
  std::vector<SampledObject> out;
  const std::uint64_t now = clock_.now();
  const std::uint64_t total = table_.config().total_slots();
  for (std::uint32_t attempt = 0; attempt < kMaxSampleAttempts; ++attempt) {
    std::uint64_t width = opts_.sample_k;
    if (opts_.sample_until_k_live) {
      const double want = double(opts_.sample_k - out.size()) * 1.25 / std::max(live_share_, 0.02);
      width = std::clamp<std::uint64_t>(static_cast<std::uint64_t>(std::ceil(want)), opts_.sample_k,
                                        std::min<std::uint64_t>(total, 1024));
    }
    const auto slots = table_.sample_slots(t_, static_cast<std::uint32_t>(width), rng_);
    std::size_t live = 0;
    for (const Slot& s : slots) {
      if (!s.atomic.live()) continue;
      ++live;
      if (s.install_pending()) continue;
      if (out.size() >= opts_.sample_k && opts_.sample_until_k_live) continue;
      if (std::any_of(out.begin(), out.end(), [&](const SampledObject& o) { return o.slot.addr == s.addr; })) continue;
      out.push_back(sampled(s, now));
    }
    live_share_ += 0.2 * (double(live) / double(slots.size()) - live_share_);
    if (out.size() >= opts_.sample_k || (!opts_.sample_until_k_live && !out.empty())) break;
  }
  return out;
}

std::optional<VictimChoice> CacheClient::pick(std::vector<SampledObject>& objs) {
  if (objs.empty()) return std::nullopt;
  if (!opts_.adaptive || registry_.size() == 1) {
    VictimChoice c;
    c.bmap = 1;
    c.sample_index = lowest_priority(objs, registry_, 0, local_values_[0]);
    return c;
  }
  const auto candidates = propose_candidates(objs, registry_, local_values_);
  return choose_victim(candidates, experts_.weights(), rng_);
}

void CacheClient::note_eviction(SampledObject& victim) {
  for (std::size_t i = 0; i < registry_.size(); ++i) {
    const AlgorithmSpec& spec = registry_.at(i);
    if (!spec.on_evict) continue;
    MetadataView v = victim.view;
    v.local_value = local_values_[i];
    local_values_[i] = spec.on_evict(v, expert_priority(registry_, i, victim, local_values_[i]));
  }
}

bool CacheClient::evict_one() {
  auto objs = sample_live();
  auto choice = pick(objs);
  if (!choice) throw Error(ErrorCode::kEvictionStarvation, "no live object found in " +
                                                              std::to_string(kMaxSampleAttempts) + " samples");
  SampledObject& victim = objs[choice->sample_index];
  bool ok = false;
  if (opts_.adaptive) {
    const EvictOutcome out = evict_to_history(t_, table_, layout_.counter_addr, victim.slot, choice->bmap);
    stats_.history_faas += out.faas;
    cached_counter_ = out.counter_after;
    last_refresh_op_ = ops_;
    ok = out.success;
  } else {
    ok = evict_to_tombstone(t_, table_, victim.slot);
  }
  if (!ok) {
    ++stats_.evict_races;
    return false;
  }
  note_eviction(victim);
  ++stats_.evictions;
  return true;
}

std::optional<CacheClient::Target> CacheClient::overflow_target(const std::vector<Slot>& bucket, std::uint64_t now) {
  // Give up the oldest history record first. Records newer than our cached
  // counter would otherwise be skipped forever, so refresh it once.
  auto is_record = [](const Slot& s) { return s.atomic.history() && s.atomic.pointer != tombstone_id(); };
  for (const Slot& s : bucket) {
    if (is_record(s) && history_age(cached_counter_, s.atomic.pointer) > history_modulus() / 2) {
      refresh_counter();
      break;
    }
  }
  std::optional<Slot> oldest;
  std::uint64_t oldest_age = 0;
  for (const Slot& s : bucket) {
    if (!is_record(s)) continue;
    std::uint64_t age = history_age(cached_counter_, s.atomic.pointer);
    if (age > history_modulus() / 2) age = 1;  // handed out after the READ
    if (!oldest || age > oldest_age) {
      oldest = s;
      oldest_age = age;
    }
  }
  if (oldest) return Target{*oldest, false, false, true};

  std::vector<SampledObject> objs;
  for (const Slot& s : bucket) {
    if (s.atomic.live() && !s.install_pending()) objs.push_back(sampled(s, now));
  }
  auto choice = pick(objs);
  if (!choice) return std::nullopt;
  note_eviction(objs[choice->sample_index]);
  return Target{objs[choice->sample_index].slot, false, true, false};
}

}  // namespace dmcache
