// Untrusted acquisition side: read frames from a source, store them in the
// pool, dispatch slot ids to RX rings by symmetric flow hash, and push
// allowed packets from the TX ring to the sink.

#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "splitids/clock.hpp"
#include "splitids/config_error.hpp"
#include "splitids/counter.hpp"
#include "splitids/lifecycle.hpp"
#include "splitids/packet.hpp"
#include "splitids/ring.hpp"

namespace splitids {

struct DispatchConfig {
  std::size_t n_rx_rings = 1;  // one per analysis worker
  std::size_t n_acquire_threads = 1;
  std::size_t burst_size = 32;
  bool inline_mode = false;

  /// Throws ConfigError when a count is zero.
  void validate() const;
};

/// MurmurHash3 x86 32-bit, seed 0.
std::uint32_t murmur3_32(std::span<const std::uint8_t> data, std::uint32_t seed = 0);

/// Symmetric flow hash: murmur3_32 of canonical_key(tuple).key.encode().
std::uint32_t rss_hash(const FiveTuple& tuple);

/// (hash & 63) % n_rings.
inline std::size_t select_ring(std::uint32_t hash, std::size_t n_rings) {
  return static_cast<std::size_t>(hash & 63u) % n_rings;
}

struct FrameView {
  std::span<const std::uint8_t> bytes;
  std::uint64_t timestamp_us = 0;  // capture timestamp, informational
};

class PacketSource {
 public:
  virtual ~PacketSource() = default;
  /// Next frame; the view stays valid until the next call. False when the
  /// source is exhausted.
  virtual bool next(FrameView& out) = 0;
};

class PacketSink {
 public:
  virtual ~PacketSink() = default;
  virtual void write(std::span<const std::uint8_t> frame) = 0;
};

/// Safe for concurrent writers.
class CountingSink final : public PacketSink {
 public:
  void write(std::span<const std::uint8_t> frame) override {
    packets_.fetch_add(1, std::memory_order_relaxed);
    bytes_.fetch_add(frame.size(), std::memory_order_relaxed);
  }
  std::uint64_t packets() const { return packets_.load(std::memory_order_relaxed); }
  std::uint64_t bytes() const { return bytes_.load(std::memory_order_relaxed); }

 private:
  std::atomic<std::uint64_t> packets_{0};
  std::atomic<std::uint64_t> bytes_{0};
};

/// Single writer only.
class MemorySink final : public PacketSink {
 public:
  void write(std::span<const std::uint8_t> frame) override {
    frames.emplace_back(frame.begin(), frame.end());
  }
  std::vector<std::vector<std::uint8_t>> frames;
};

struct AcquireStats {
  RelaxedCounter received;
  RelaxedCounter enqueued;
  RelaxedCounter dropped;         // RX ring full
  RelaxedCounter pool_exhausted;
  RelaxedCounter decode_failed;   // truncated, malformed or oversized
  RelaxedCounter unsupported_l3;  // stored then released, never analysed
  RelaxedCounter tx_sent;
  RelaxedCounter received_bytes;
};

enum class IngestOutcome : std::uint8_t {
  Enqueued,
  RingFull,
  PoolExhausted,
  DecodeFailed,
  UnsupportedL3,
};

enum class StepStatus : std::uint8_t { Ok, SourceExhausted, NotRunning };

struct StepResult {
  std::size_t moved = 0;
  StepStatus status = StepStatus::Ok;
};

class Acquirer {
 public:
  Acquirer(DispatchConfig config, PacketPool& pool, std::span<Ring<SlotId>* const> rx_rings,
           Ring<SlotId>* tx_ring, const Lifecycle& lifecycle, const ClockSource& clock);

  /// One loop iteration: up to burst_size frames from the source, then the
  /// TX drain in inline mode. Does nothing unless the lifecycle is Running.
  StepResult step(PacketSource& source, PacketSink* sink);

  /// Decodes one frame into the pool and enqueues it on its RX ring.
  IngestOutcome ingest(std::span<const std::uint8_t> frame, std::uint64_t arrival_us,
                       std::size_t* ring_index = nullptr);

  /// Writes every TX-ring packet to the sink and frees its slot. No-op in
  /// passive mode.
  std::size_t drain_tx(PacketSink* sink);

  const AcquireStats& stats() const { return stats_; }
  const DispatchConfig& config() const { return config_; }

 private:
  DispatchConfig config_;
  PacketPool& pool_;
  std::vector<Ring<SlotId>*> rx_;
  Ring<SlotId>* tx_;
  const Lifecycle& lifecycle_;
  const ClockSource& clock_;
  AcquireStats stats_;
  std::vector<SlotId> tx_burst_;
};

}  // namespace splitids
