// Per-worker connection tracking and TCP stream reassembly.
//
// Each analysis worker owns one FlowTable; tables are never shared.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "splitids/packet.hpp"

namespace splitids {

enum class FlowState : std::uint8_t { New, SynSeen, Established, Closing, Closed };

std::string_view to_string(FlowState state);

inline constexpr std::size_t kDefaultReassemblyCap = 64 * 1024;

/// Out-of-order segment store for one direction of a TCP stream. Overlaps
/// are resolved first-arrival-wins: bytes already buffered or delivered are
/// never overwritten.
class SegmentBuffer {
 public:
  explicit SegmentBuffer(std::size_t cap_bytes = kDefaultReassemblyCap) : cap_(cap_bytes) {}

  bool has_base() const { return base_seq_.has_value(); }
  std::optional<std::uint32_t> base_seq() const { return base_seq_; }
  /// Sequence number of stream offset 0. Ignored once a base is set.
  void set_base(std::uint32_t seq);

  /// Inserts a segment and returns the bytes that became contiguous. If no
  /// base is set, `seq` becomes the base. When buffered bytes exceed the cap
  /// the oldest gap is skipped and the bytes behind it are delivered too.
  std::vector<std::uint8_t> insert(std::uint32_t seq, std::span<const std::uint8_t> payload);

  std::uint64_t delivered_upto() const { return delivered_upto_; }
  std::size_t buffered_bytes() const { return buffered_; }
  std::size_t segment_count() const { return segments_.size(); }
  std::uint64_t flushed_gaps() const { return flushed_gaps_; }

 private:
  void deliver_contiguous(std::vector<std::uint8_t>& out);

  std::size_t cap_;
  std::optional<std::uint32_t> base_seq_;
  std::uint64_t delivered_upto_ = 0;
  std::size_t buffered_ = 0;
  std::uint64_t flushed_gaps_ = 0;
  std::map<std::uint64_t, std::vector<std::uint8_t>> segments_;  // stream offset -> bytes
};

struct Flow {
  FlowKey key;
  FlowState state = FlowState::New;
  std::uint64_t created_us = 0;
  std::uint64_t last_seen_us = 0;
  std::uint64_t pkts_fwd = 0;
  std::uint64_t pkts_rev = 0;
  std::array<SegmentBuffer, 2> reassembly;  // indexed by Direction
  std::size_t footprint_bytes = 0;

  /// Direction of the connection's client (first SYN sender, else the
  /// sender of the first packet seen).
  Direction initiator = Direction::Forward;
  bool syn_ack_seen = false;
  std::array<bool, 2> fin_seen{false, false};
  std::uint32_t anomalies = 0;

  bool to_server(Direction d) const { return d == initiator; }
  std::uint64_t packets(Direction d) const { return d == Direction::Forward ? pkts_fwd : pkts_rev; }
};

struct FlowTransition {
  FlowState from = FlowState::New;
  FlowState to = FlowState::New;
  bool anomaly = false;  // nonsensical flag combination, state left unchanged
};

/// Applies one packet to the flow. `direction` is the packet's orientation
/// relative to flow.key.
FlowTransition update_flow(Flow& flow, const PacketDescriptor& desc, Direction direction,
                           std::uint64_t now_us);

struct FlowTableConfig {
  std::size_t max_flows = std::size_t{1} << 20;
  std::uint64_t tcp_timeout_us = 30'000'000;
  std::uint64_t udp_timeout_us = 10'000'000;  // also ICMP and other
  std::size_t reassembly_cap = kDefaultReassemblyCap;
  std::size_t tcp_flow_bytes = 4096;    // connection plus stream state
  std::size_t other_flow_bytes = 2048;
};

class FlowTable {
 public:
  explicit FlowTable(FlowTableConfig config = {}) : config_(config) {}

  struct Lookup {
    Flow* flow = nullptr;  // null when the table is full
    bool created = false;
  };

  Lookup lookup_or_create(const FlowKey& key, std::uint64_t now_us);
  Flow* find(const FlowKey& key);

  /// Reassembles one TCP segment and keeps the footprint counters exact.
  std::vector<std::uint8_t> reassemble(Flow& flow, Direction direction, std::uint32_t seq,
                                       std::span<const std::uint8_t> payload);

  /// Removes every flow idle for more than `timeout_us`.
  std::vector<Flow> expire_flows(std::uint64_t now_us, std::uint64_t timeout_us);
  /// Same, with the per-protocol timeouts from the config.
  std::vector<Flow> expire_idle(std::uint64_t now_us);

  std::size_t size() const { return flows_.size(); }
  std::size_t footprint_bytes() const { return footprint_; }
  std::uint64_t table_full_events() const { return table_full_events_; }
  std::uint64_t reassembly_flushes() const { return reassembly_flushes_; }
  const FlowTableConfig& config() const { return config_; }

  template <typename F>
  void for_each(F&& fn) const {
    for (const auto& [key, flow] : flows_) fn(flow);
  }

 private:
  std::size_t base_footprint(Proto proto) const {
    return proto == Proto::Tcp ? config_.tcp_flow_bytes : config_.other_flow_bytes;
  }

  template <typename Pred>
  std::vector<Flow> evict_if(Pred&& pred);

  FlowTableConfig config_;
  std::unordered_map<FlowKey, Flow, FlowKeyHash> flows_;
  std::size_t footprint_ = 0;
  std::uint64_t table_full_events_ = 0;
  std::uint64_t reassembly_flushes_ = 0;
};

}  // namespace splitids
