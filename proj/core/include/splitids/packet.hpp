// Packet pool, packet descriptors and the Ethernet/IPv4 decoder.
//
// Frames are copied exactly once, into a slot of the shared PacketPool, when
// they are ingested. Everything downstream (rings, analysis workers, the TX
// path) refers to a frame by its slot id and reads the bytes in place.

#pragma once

#include <array>
#include <atomic>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "splitids/ring.hpp"

namespace splitids {

enum class Proto : std::uint8_t { Tcp, Udp, Icmp, Other };

std::string_view to_string(Proto proto);

/// IPv4 address in host byte order.
struct Ipv4Address {
  std::uint32_t value = 0;

  static constexpr Ipv4Address from_octets(std::uint8_t a, std::uint8_t b, std::uint8_t c,
                                           std::uint8_t d) {
    return Ipv4Address{(std::uint32_t{a} << 24) | (std::uint32_t{b} << 16) |
                       (std::uint32_t{c} << 8) | std::uint32_t{d}};
  }
  static std::optional<Ipv4Address> parse(std::string_view text);
  std::string to_string() const;

  friend constexpr auto operator<=>(Ipv4Address, Ipv4Address) = default;
};

struct FiveTuple {
  Proto proto = Proto::Other;
  Ipv4Address src_ip;
  Ipv4Address dst_ip;
  std::uint16_t src_port = 0;  // 0 for ICMP and OTHER
  std::uint16_t dst_port = 0;

  FiveTuple reversed() const { return {proto, dst_ip, src_ip, dst_port, src_port}; }
  friend bool operator==(const FiveTuple&, const FiveTuple&) = default;
};

enum class Direction : std::uint8_t { Forward = 0, Reverse = 1 };

constexpr Direction opposite(Direction d) {
  return d == Direction::Forward ? Direction::Reverse : Direction::Forward;
}

/// Bidirectional flow identity: the lower (ip, port) endpoint comes first.
struct FlowKey {
  Proto proto = Proto::Other;
  Ipv4Address lo_ip;
  Ipv4Address hi_ip;
  std::uint16_t lo_port = 0;
  std::uint16_t hi_port = 0;

  friend bool operator==(const FlowKey&, const FlowKey&) = default;

  /// Fixed 13-byte encoding: proto, lo_ip, hi_ip, lo_port, hi_port (big-endian).
  std::array<std::uint8_t, 13> encode() const;
};

struct FlowKeyHash {
  std::size_t operator()(const FlowKey& key) const noexcept;
};

struct CanonicalKey {
  FlowKey key;
  Direction direction = Direction::Forward;  // of the input tuple
};

CanonicalKey canonical_key(const FiveTuple& tuple);

namespace tcp_flags {
inline constexpr std::uint8_t kFin = 0x01;
inline constexpr std::uint8_t kSyn = 0x02;
inline constexpr std::uint8_t kRst = 0x04;
inline constexpr std::uint8_t kPsh = 0x08;
inline constexpr std::uint8_t kAck = 0x10;
}  // namespace tcp_flags

using SlotId = std::uint32_t;

struct PacketDescriptor {
  SlotId slot = 0;
  std::uint16_t frame_len = 0;
  std::uint64_t arrival_us = 0;
  std::uint16_t l3_offset = 0;
  std::uint16_t l4_offset = 0;
  std::uint16_t payload_offset = 0;
  std::uint16_t payload_len = 0;  // bounded by the IP total length, excludes padding
  FiveTuple tuple;
  std::uint8_t tcp_flags = 0;
  std::uint32_t tcp_seq = 0;
  bool decode_ok = false;
};

/// Fixed-size frame slots plus one descriptor per slot, with a lockless free
/// list. Slot ids are handed out by store() and stay owned by the caller
/// until release().
class PacketPool {
 public:
  static constexpr std::size_t kSlotSize = 2048;

  explicit PacketPool(std::size_t capacity);

  PacketPool(const PacketPool&) = delete;
  PacketPool& operator=(const PacketPool&) = delete;

  /// Copies `frame` into a free slot. nullopt when the pool is exhausted.
  std::optional<SlotId> store(std::span<const std::uint8_t> frame);
  void release(SlotId slot);

  std::span<const std::uint8_t> frame(SlotId slot) const;
  PacketDescriptor& descriptor(SlotId slot) { return descriptors_[slot]; }
  const PacketDescriptor& descriptor(SlotId slot) const { return descriptors_[slot]; }

  std::size_t capacity() const { return capacity_; }
  std::size_t in_use() const { return in_use_.load(std::memory_order_acquire); }
  /// Number of frame copies into the pool since construction.
  std::uint64_t writes() const { return writes_.load(std::memory_order_relaxed); }

 private:
  std::size_t capacity_;
  std::unique_ptr<std::uint8_t[]> bytes_;
  std::vector<std::uint16_t> lengths_;
  std::vector<PacketDescriptor> descriptors_;
  std::unique_ptr<std::atomic<bool>[]> allocated_;
  Ring<SlotId> free_;
  std::atomic<std::size_t> in_use_{0};
  std::atomic<std::uint64_t> writes_{0};
};

enum class DecodeStatus : std::uint8_t {
  Ok,
  Truncated,      // shorter than the headers it claims
  Malformed,      // inconsistent header length fields
  UnsupportedL3,  // stored, descriptor has decode_ok == false
  Oversized,      // larger than a pool slot
  PoolExhausted,
};

std::string_view to_string(DecodeStatus status);

struct DecodeResult {
  DecodeStatus status = DecodeStatus::Truncated;
  PacketDescriptor descriptor;

  /// True when the frame occupies a pool slot the caller must release.
  bool holds_slot() const {
    return status == DecodeStatus::Ok || status == DecodeStatus::UnsupportedL3;
  }
};

/// Validates headers, stores the frame into `pool` and fills the slot's
/// descriptor. Truncated / Malformed / Oversized / PoolExhausted frames do
/// not consume a slot.
DecodeResult decode(std::span<const std::uint8_t> frame, std::uint64_t arrival_us,
                    PacketPool& pool);

/// Payload view of a decoded descriptor.
inline std::span<const std::uint8_t> payload_of(const PacketPool& pool,
                                                const PacketDescriptor& desc) {
  return pool.frame(desc.slot).subspan(desc.payload_offset, desc.payload_len);
}

}  // namespace splitids
