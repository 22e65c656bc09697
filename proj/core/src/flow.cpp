#include "splitids/flow.hpp"

#include <algorithm>
#include <iterator>

namespace splitids {

std::string_view to_string(FlowState state) {
  switch (state) {
    case FlowState::New: return "new";
    case FlowState::SynSeen: return "syn-seen";
    case FlowState::Established: return "established";
    case FlowState::Closing: return "closing";
    case FlowState::Closed: return "closed";
  }
  return "?";
}

void SegmentBuffer::set_base(std::uint32_t seq) {
  if (!base_seq_) base_seq_ = seq;
}

std::vector<std::uint8_t> SegmentBuffer::insert(std::uint32_t seq,
                                                std::span<const std::uint8_t> payload) {
  std::vector<std::uint8_t> out;
  if (payload.empty()) return out;
  if (!base_seq_) base_seq_ = seq;

  // Position relative to the next expected byte, using 32-bit wraparound.
  const auto expected = static_cast<std::uint32_t>(*base_seq_ + delivered_upto_);
  const auto rel = static_cast<std::int32_t>(seq - expected);
  std::int64_t start = static_cast<std::int64_t>(delivered_upto_) + rel;
  const std::int64_t end = start + static_cast<std::int64_t>(payload.size());
  const auto delivered = static_cast<std::int64_t>(delivered_upto_);
  if (end <= delivered) return out;
  if (start < delivered) start = delivered;

  const auto seg_end = static_cast<std::uint64_t>(end);
  auto pos = static_cast<std::uint64_t>(start);
  const std::int64_t payload_origin = end - static_cast<std::int64_t>(payload.size());

  auto it = segments_.upper_bound(pos);
  if (it != segments_.begin()) {
    const auto prev = std::prev(it);
    pos = std::max(pos, prev->first + prev->second.size());
  }
  while (pos < seg_end) {
    const auto next = segments_.lower_bound(pos);
    const std::uint64_t stop =
        next == segments_.end() ? seg_end : std::min(seg_end, next->first);
    if (stop > pos) {
      const auto from = static_cast<std::size_t>(static_cast<std::int64_t>(pos) - payload_origin);
      const auto len = static_cast<std::size_t>(stop - pos);
      segments_.emplace(pos, std::vector<std::uint8_t>(payload.begin() + from,
                                                       payload.begin() + from + len));
      buffered_ += len;
    }
    if (next == segments_.end() || next->first >= seg_end) break;
    pos = next->first + next->second.size();
  }

  deliver_contiguous(out);
  while (buffered_ > cap_ && !segments_.empty()) {
    delivered_upto_ = segments_.begin()->first;
    ++flushed_gaps_;
    deliver_contiguous(out);
  }
  return out;
}

void SegmentBuffer::deliver_contiguous(std::vector<std::uint8_t>& out) {
  while (!segments_.empty() && segments_.begin()->first == delivered_upto_) {
    auto node = segments_.extract(segments_.begin());
    const auto& bytes = node.mapped();
    out.insert(out.end(), bytes.begin(), bytes.end());
    delivered_upto_ += bytes.size();
    buffered_ -= bytes.size();
  }
}

FlowTransition update_flow(Flow& flow, const PacketDescriptor& desc, Direction direction,
                           std::uint64_t now_us) {
  FlowTransition tr{flow.state, flow.state, false};
  const bool first_packet = flow.pkts_fwd + flow.pkts_rev == 0;
  if (direction == Direction::Forward) {
    ++flow.pkts_fwd;
  } else {
    ++flow.pkts_rev;
  }
  flow.last_seen_us = std::max(flow.last_seen_us, now_us);
  if (first_packet) flow.initiator = direction;

  const bool both_seen = flow.pkts_fwd > 0 && flow.pkts_rev > 0;

  if (flow.key.proto != Proto::Tcp) {
    if (flow.state == FlowState::New && both_seen) flow.state = FlowState::Established;
    tr.to = flow.state;
    return tr;
  }

  const std::uint8_t flags = desc.tcp_flags;
  const bool syn = flags & tcp_flags::kSyn;
  const bool ack = flags & tcp_flags::kAck;
  const bool fin = flags & tcp_flags::kFin;
  const bool rst = flags & tcp_flags::kRst;
  const auto d = static_cast<std::size_t>(direction);

  if ((syn && (fin || rst)) || flags == 0) {
    ++flow.anomalies;
    tr.anomaly = true;
    return tr;
  }

  if (rst) {
    flow.state = FlowState::Closed;
  } else if (syn && !ack) {
    if (flow.state == FlowState::New) {
      flow.state = FlowState::SynSeen;
      flow.initiator = direction;
      flow.reassembly[d].set_base(desc.tcp_seq + 1);
    }
  } else if (syn) {
    if (flow.state == FlowState::New || flow.state == FlowState::SynSeen) {
      if (flow.state == FlowState::New) flow.initiator = opposite(direction);
      flow.state = FlowState::SynSeen;
      flow.syn_ack_seen = true;
      flow.reassembly[d].set_base(desc.tcp_seq + 1);
    }
  } else {
    switch (flow.state) {
      case FlowState::New:
        if (both_seen) flow.state = FlowState::Established;
        break;
      case FlowState::SynSeen:
        if ((flow.syn_ack_seen && ack && direction == flow.initiator) || both_seen) {
          flow.state = FlowState::Established;
        }
        break;
      default:
        break;
    }
    if (fin) {
      flow.fin_seen[d] = true;
      if (flow.state == FlowState::Established) {
        flow.state = FlowState::Closing;
      }
      if (flow.state == FlowState::Closing && flow.fin_seen[0] && flow.fin_seen[1]) {
        flow.state = FlowState::Closed;
      }
    }
  }
  tr.to = flow.state;
  return tr;
}

FlowTable::Lookup FlowTable::lookup_or_create(const FlowKey& key, std::uint64_t now_us) {
  if (auto it = flows_.find(key); it != flows_.end()) {
    return {&it->second, false};
  }
  if (flows_.size() >= config_.max_flows) {
    ++table_full_events_;
    return {};
  }
  Flow flow{.key = key,
            .created_us = now_us,
            .last_seen_us = now_us,
            .reassembly = {SegmentBuffer(config_.reassembly_cap),
                           SegmentBuffer(config_.reassembly_cap)},
            .footprint_bytes = base_footprint(key.proto)};
  footprint_ += flow.footprint_bytes;
  auto [it, inserted] = flows_.emplace(key, std::move(flow));
  return {&it->second, inserted};
}

Flow* FlowTable::find(const FlowKey& key) {
  auto it = flows_.find(key);
  return it == flows_.end() ? nullptr : &it->second;
}

std::vector<std::uint8_t> FlowTable::reassemble(Flow& flow, Direction direction,
                                                std::uint32_t seq,
                                                std::span<const std::uint8_t> payload) {
  auto& buffer = flow.reassembly[static_cast<std::size_t>(direction)];
  const std::size_t buffered_before = buffer.buffered_bytes();
  const std::uint64_t flushes_before = buffer.flushed_gaps();
  auto out = buffer.insert(seq, payload);
  const std::size_t buffered_after = buffer.buffered_bytes();
  flow.footprint_bytes = flow.footprint_bytes - buffered_before + buffered_after;
  footprint_ = footprint_ - buffered_before + buffered_after;
  reassembly_flushes_ += buffer.flushed_gaps() - flushes_before;
  return out;
}

template <typename Pred>
std::vector<Flow> FlowTable::evict_if(Pred&& pred) {
  std::vector<Flow> evicted;
  for (auto it = flows_.begin(); it != flows_.end();) {
    if (pred(it->second)) {
      footprint_ -= it->second.footprint_bytes;
      evicted.push_back(std::move(it->second));
      it = flows_.erase(it);
    } else {
      ++it;
    }
  }
  return evicted;
}

std::vector<Flow> FlowTable::expire_flows(std::uint64_t now_us, std::uint64_t timeout_us) {
  return evict_if([&](const Flow& f) {
    return now_us > f.last_seen_us && now_us - f.last_seen_us > timeout_us;
  });
}

std::vector<Flow> FlowTable::expire_idle(std::uint64_t now_us) {
  return evict_if([&](const Flow& f) {
    const std::uint64_t timeout =
        f.key.proto == Proto::Tcp ? config_.tcp_timeout_us : config_.udp_timeout_us;
    return now_us > f.last_seen_us && now_us - f.last_seen_us > timeout;
  });
}

}  // namespace splitids
