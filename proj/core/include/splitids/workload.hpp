// Workload generation: frame construction, the deterministic synthetic
// TCP generator, and packet sources over generated, captured or in-memory
// frames.

#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "splitids/acquire.hpp"
#include "splitids/config_error.hpp"
#include "splitids/packet.hpp"

namespace splitids {

using Frame = std::vector<std::uint8_t>;
using FrameList = std::vector<Frame>;

struct FrameSpec {
  FiveTuple tuple;
  std::uint8_t tcp_flags = 0;
  std::uint32_t seq = 0;
  std::uint32_t ack = 0;
  std::span<const std::uint8_t> payload{};
  /// Ethernet padding after the IP datagram up to this frame size.
  std::size_t pad_to = 0;
};

/// Ethernet + IPv4 (with header checksum) + TCP/UDP/ICMP echo + payload.
/// Proto::Other produces a bare IPv4 datagram with protocol 253.
Frame build_frame(const FrameSpec& spec);

inline constexpr std::size_t kTcpFrameOverhead = 14 + 20 + 20;
inline constexpr std::size_t kMinSynthFrame = 64;
inline constexpr std::size_t kMaxSynthFrame = 1518;

/// Server response carrying a TLS heartbeat record header with the given
/// length field: 18 03 00 <len hi> <len lo>.
std::vector<std::uint8_t> heartbeat_payload(std::uint16_t length_field);

/// Client SYN, server SYN-ACK, client ACK, then one server-to-client data
/// segment carrying `server_payload`.
FrameList tcp_session(const FiveTuple& client_to_server,
                      std::span<const std::uint8_t> server_payload);

struct AttackInjection {
  double rate = 0.0;  // fraction of packet_count
  std::vector<std::uint8_t> payload = heartbeat_payload(0x0090);
};

struct WorkloadSpec {
  enum class Kind : std::uint8_t { Synth, Pcap, Memory };

  Kind kind = Kind::Synth;
  std::size_t packet_size = 64;
  std::size_t n_flows = 256;
  /// Synth: frames generated. Pcap/Memory: 0 means one pass; otherwise the
  /// frames are cycled (repeat) or truncated to this many.
  std::uint64_t packet_count = 100'000;
  std::string pcap_path;
  bool repeat = false;
  std::uint64_t seed = 1;
  /// Server port of flow f is server_ports[f % size].
  std::vector<std::uint16_t> server_ports{80, 443, 25, 21, 8080, 110};
  std::optional<AttackInjection> attack;
  std::shared_ptr<const FrameList> frames;  // Kind::Memory

  /// Throws ConfigError.
  void validate() const;
};

/// Random-access generator for synthetic TCP workloads. Packet k belongs to
/// flow k % n_flows; a flow's first three packets are its handshake, then
/// data alternates client-to-server and server-to-client. Every frame is
/// exactly packet_size bytes (handshake frames are padded). Attacks are
/// injected into server-to-client data packets, spread evenly.
class SynthGenerator {
 public:
  explicit SynthGenerator(WorkloadSpec spec);

  std::uint64_t count() const { return spec_.packet_count; }
  const WorkloadSpec& spec() const { return spec_; }

  Frame frame(std::uint64_t k) const;
  void frame_into(std::uint64_t k, Frame& out) const;
  /// Tuple of packet k as sent on the wire.
  FiveTuple tuple(std::uint64_t k) const;
  /// Client-to-server tuple of flow f.
  FiveTuple flow_tuple(std::size_t f) const;

  bool is_attack(std::uint64_t k) const;
  /// Server-to-client data packets among the first `k` packets.
  std::uint64_t eligible_before(std::uint64_t k) const;
  std::uint64_t attack_count() const { return attacks_; }

 private:
  std::uint32_t isn(std::size_t flow, bool server) const;

  WorkloadSpec spec_;
  std::size_t payload_len_;
  std::uint64_t eligible_ = 0;
  std::uint64_t attacks_ = 0;
};

/// Packets start, start + stride, start + 2*stride, ... of a generator.
class SynthSource final : public PacketSource {
 public:
  SynthSource(std::shared_ptr<const SynthGenerator> gen, std::uint64_t start = 0,
              std::uint64_t stride = 1);
  bool next(FrameView& out) override;

 private:
  std::shared_ptr<const SynthGenerator> gen_;
  std::uint64_t k_;
  std::uint64_t stride_;
  Frame buffer_;
};

/// Frames from a shared list. With `limit` > 0 the list is cycled (repeat)
/// or cut to `limit` frames; indices are strided as for SynthSource.
class MemorySource final : public PacketSource {
 public:
  MemorySource(std::shared_ptr<const FrameList> frames, std::uint64_t start = 0,
               std::uint64_t stride = 1, bool repeat = false, std::uint64_t limit = 0);
  bool next(FrameView& out) override;

 private:
  std::shared_ptr<const FrameList> frames_;
  std::uint64_t k_;
  std::uint64_t stride_;
  std::uint64_t end_;
};

/// Splits a workload into `n` disjoint strided sources.
std::vector<std::unique_ptr<PacketSource>> make_sources(const WorkloadSpec& spec, std::size_t n);

/// Number of frames a workload produces in total.
std::uint64_t workload_size(const WorkloadSpec& spec);

/// Every frame of a workload, in order.
FrameList materialize(const WorkloadSpec& spec);

}  // namespace splitids
