#include "splitids/acquire.hpp"

#include <bit>
#include <cstring>

namespace splitids {

void DispatchConfig::validate() const {
  if (n_rx_rings == 0) throw ConfigError("n_rx_rings must be at least 1");
  if (n_acquire_threads == 0) throw ConfigError("n_acquire_threads must be at least 1");
  if (burst_size == 0) throw ConfigError("burst_size must be at least 1");
}

std::uint32_t murmur3_32(std::span<const std::uint8_t> data, std::uint32_t seed) {
  constexpr std::uint32_t c1 = 0xcc9e2d51;
  constexpr std::uint32_t c2 = 0x1b873593;
  std::uint32_t h = seed;
  const std::size_t blocks = data.size() / 4;
  for (std::size_t i = 0; i < blocks; ++i) {
    const std::uint8_t* p = data.data() + i * 4;
    std::uint32_t k = std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) |
                      (std::uint32_t{p[2]} << 16) | (std::uint32_t{p[3]} << 24);
    k *= c1;
    k = std::rotl(k, 15);
    k *= c2;
    h ^= k;
    h = std::rotl(h, 13);
    h = h * 5 + 0xe6546b64;
  }
  const std::uint8_t* tail = data.data() + blocks * 4;
  std::uint32_t k = 0;
  switch (data.size() & 3) {
    case 3: k ^= std::uint32_t{tail[2]} << 16; [[fallthrough]];
    case 2: k ^= std::uint32_t{tail[1]} << 8; [[fallthrough]];
    case 1:
      k ^= tail[0];
      k *= c1;
      k = std::rotl(k, 15);
      k *= c2;
      h ^= k;
  }
  h ^= static_cast<std::uint32_t>(data.size());
  h ^= h >> 16;
  h *= 0x85ebca6b;
  h ^= h >> 13;
  h *= 0xc2b2ae35;
  h ^= h >> 16;
  return h;
}

std::uint32_t rss_hash(const FiveTuple& tuple) {
  const auto bytes = canonical_key(tuple).key.encode();
  return murmur3_32(bytes);
}

Acquirer::Acquirer(DispatchConfig config, PacketPool& pool,
                   std::span<Ring<SlotId>* const> rx_rings, Ring<SlotId>* tx_ring,
                   const Lifecycle& lifecycle, const ClockSource& clock)
    : config_(config),
      pool_(pool),
      rx_(rx_rings.begin(), rx_rings.end()),
      tx_(tx_ring),
      lifecycle_(lifecycle),
      clock_(clock) {
  config_.validate();
  if (rx_.size() != config_.n_rx_rings) {
    throw ConfigError("expected " + std::to_string(config_.n_rx_rings) + " RX rings, got " +
                      std::to_string(rx_.size()));
  }
  if (config_.inline_mode && tx_ == nullptr) throw ConfigError("inline mode needs a TX ring");
  tx_burst_.resize(config_.burst_size);
}

IngestOutcome Acquirer::ingest(std::span<const std::uint8_t> frame, std::uint64_t arrival_us,
                               std::size_t* ring_index) {
  stats_.received.add();
  stats_.received_bytes.add(frame.size());
  const DecodeResult r = decode(frame, arrival_us, pool_);
  switch (r.status) {
    case DecodeStatus::Ok:
      break;
    case DecodeStatus::UnsupportedL3:
      pool_.release(r.descriptor.slot);
      stats_.unsupported_l3.add();
      return IngestOutcome::UnsupportedL3;
    case DecodeStatus::PoolExhausted:
      stats_.pool_exhausted.add();
      return IngestOutcome::PoolExhausted;
    default:
      stats_.decode_failed.add();
      return IngestOutcome::DecodeFailed;
  }
  const std::size_t ring = select_ring(rss_hash(r.descriptor.tuple), rx_.size());
  if (ring_index != nullptr) *ring_index = ring;
  if (!rx_[ring]->try_enqueue(r.descriptor.slot)) {
    pool_.release(r.descriptor.slot);
    stats_.dropped.add();
    return IngestOutcome::RingFull;
  }
  stats_.enqueued.add();
  return IngestOutcome::Enqueued;
}

StepResult Acquirer::step(PacketSource& source, PacketSink* sink) {
  StepResult result;
  if (lifecycle_.state() != LifecycleState::Running) {
    result.status = StepStatus::NotRunning;
    return result;
  }
  FrameView frame;
  for (std::size_t i = 0; i < config_.burst_size; ++i) {
    if (!source.next(frame)) {
      result.status = StepStatus::SourceExhausted;
      break;
    }
    ingest(frame.bytes, clock_.gettime_us());
    ++result.moved;
  }
  drain_tx(sink);
  return result;
}

std::size_t Acquirer::drain_tx(PacketSink* sink) {
  if (!config_.inline_mode || tx_ == nullptr) return 0;
  std::size_t total = 0;
  for (;;) {
    const std::size_t n = tx_->dequeue_burst(std::span<SlotId>(tx_burst_));
    for (std::size_t i = 0; i < n; ++i) {
      if (sink != nullptr) sink->write(pool_.frame(tx_burst_[i]));
      pool_.release(tx_burst_[i]);
    }
    stats_.tx_sent.add(n);
    total += n;
    if (n < tx_burst_.size()) return total;
  }
}

}  // namespace splitids
