#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "splitids/flow.hpp"

namespace splitids {
namespace {

using Bytes = std::vector<std::uint8_t>;

Bytes seq_bytes(std::uint8_t from, std::size_t n) {
  Bytes b(n);
  for (std::size_t i = 0; i < n; ++i) b[i] = static_cast<std::uint8_t>(from + i);
  return b;
}

TEST(SegmentBuffer, InOrderSegmentsAreDeliveredImmediately) {
  SegmentBuffer buf;
  buf.set_base(100);
  EXPECT_EQ(buf.insert(100, seq_bytes(0, 3)), seq_bytes(0, 3));
  EXPECT_EQ(buf.insert(103, seq_bytes(3, 2)), seq_bytes(3, 2));
  EXPECT_EQ(buf.delivered_upto(), 5u);
  EXPECT_EQ(buf.buffered_bytes(), 0u);
}

TEST(SegmentBuffer, GapIsHeldUntilFilled) {
  SegmentBuffer buf;
  buf.set_base(0);
  EXPECT_TRUE(buf.insert(4, seq_bytes(4, 4)).empty());
  EXPECT_EQ(buf.buffered_bytes(), 4u);
  EXPECT_EQ(buf.insert(0, seq_bytes(0, 4)), seq_bytes(0, 8));
  EXPECT_EQ(buf.segment_count(), 0u);
}

TEST(SegmentBuffer, FirstArrivalWinsOnOverlap) {
  SegmentBuffer buf;
  buf.set_base(0);
  EXPECT_TRUE(buf.insert(2, Bytes{'A', 'A', 'A'}).empty());
  // Covers 0..5; bytes 2..4 are already held and must keep their value.
  EXPECT_EQ(buf.insert(0, Bytes{'b', 'b', 'b', 'b', 'b', 'b'}),
            (Bytes{'b', 'b', 'A', 'A', 'A', 'b'}));
  // Retransmission of delivered bytes is ignored.
  EXPECT_TRUE(buf.insert(1, Bytes{'z', 'z'}).empty());
}

TEST(SegmentBuffer, FirstSegmentSetsTheBaseWhenNoneGiven) {
  SegmentBuffer buf;
  EXPECT_EQ(buf.insert(5000, Bytes{1, 2}), (Bytes{1, 2}));
  EXPECT_EQ(buf.base_seq(), 5000u);
}

TEST(SegmentBuffer, SequenceWraparound) {
  SegmentBuffer buf;
  buf.set_base(0xfffffffeu);
  EXPECT_TRUE(buf.insert(0, Bytes{3, 4}).empty());
  EXPECT_EQ(buf.insert(0xfffffffeu, Bytes{1, 2}), (Bytes{1, 2, 3, 4}));
}

TEST(SegmentBuffer, CapOverflowSkipsTheOldestGap) {
  SegmentBuffer buf(4);
  buf.set_base(0);
  EXPECT_TRUE(buf.insert(2, Bytes{2, 3}).empty());
  const Bytes out = buf.insert(6, Bytes{6, 7, 8});
  EXPECT_EQ(out, (Bytes{2, 3}));
  EXPECT_EQ(buf.flushed_gaps(), 1u);
  EXPECT_EQ(buf.buffered_bytes(), 3u);
}

PacketDescriptor tcp_desc(std::uint8_t flags, std::uint32_t seq = 0) {
  PacketDescriptor d;
  d.tuple.proto = Proto::Tcp;
  d.tcp_flags = flags;
  d.tcp_seq = seq;
  d.decode_ok = true;
  return d;
}

Flow tcp_flow() {
  Flow f;
  f.key.proto = Proto::Tcp;
  return f;
}

TEST(UpdateFlow, ThreeWayHandshakeEstablishes) {
  Flow f = tcp_flow();
  using namespace tcp_flags;
  EXPECT_EQ(update_flow(f, tcp_desc(kSyn, 99), Direction::Reverse, 1).to, FlowState::SynSeen);
  EXPECT_EQ(f.initiator, Direction::Reverse);
  EXPECT_EQ(update_flow(f, tcp_desc(kSyn | kAck, 499), Direction::Forward, 2).to,
            FlowState::SynSeen);
  EXPECT_EQ(update_flow(f, tcp_desc(kAck), Direction::Reverse, 3).to, FlowState::Established);
  EXPECT_TRUE(f.to_server(Direction::Reverse));
  EXPECT_FALSE(f.to_server(Direction::Forward));
  EXPECT_EQ(f.reassembly[1].base_seq(), 100u);
  EXPECT_EQ(f.reassembly[0].base_seq(), 500u);
  EXPECT_EQ(f.last_seen_us, 3u);
}

TEST(UpdateFlow, FinFromBothSidesCloses) {
  Flow f = tcp_flow();
  using namespace tcp_flags;
  update_flow(f, tcp_desc(kSyn), Direction::Forward, 0);
  update_flow(f, tcp_desc(kSyn | kAck), Direction::Reverse, 0);
  update_flow(f, tcp_desc(kAck), Direction::Forward, 0);
  EXPECT_EQ(update_flow(f, tcp_desc(kFin | kAck), Direction::Forward, 0).to, FlowState::Closing);
  EXPECT_EQ(update_flow(f, tcp_desc(kFin | kAck), Direction::Reverse, 0).to, FlowState::Closed);
}

TEST(UpdateFlow, RstClosesAndNonsenseFlagsAreAnomalies) {
  Flow f = tcp_flow();
  using namespace tcp_flags;
  const auto tr = update_flow(f, tcp_desc(kSyn | kFin), Direction::Forward, 0);
  EXPECT_TRUE(tr.anomaly);
  EXPECT_EQ(f.state, FlowState::New);
  EXPECT_TRUE(update_flow(f, tcp_desc(0), Direction::Forward, 0).anomaly);
  EXPECT_EQ(f.anomalies, 2u);
  EXPECT_EQ(update_flow(f, tcp_desc(kRst), Direction::Forward, 0).to, FlowState::Closed);
}

TEST(UpdateFlow, MidstreamPickupEstablishesOnceBothSidesSpeak) {
  Flow f = tcp_flow();
  using namespace tcp_flags;
  EXPECT_EQ(update_flow(f, tcp_desc(kAck), Direction::Forward, 0).to, FlowState::New);
  EXPECT_EQ(update_flow(f, tcp_desc(kAck), Direction::Reverse, 0).to, FlowState::Established);
}

TEST(UpdateFlow, UdpEstablishesOnReply) {
  Flow f;
  f.key.proto = Proto::Udp;
  PacketDescriptor d;
  d.tuple.proto = Proto::Udp;
  EXPECT_EQ(update_flow(f, d, Direction::Forward, 0).to, FlowState::New);
  EXPECT_EQ(update_flow(f, d, Direction::Reverse, 0).to, FlowState::Established);
}

FlowKey key_n(std::uint32_t n, Proto proto = Proto::Tcp) {
  return canonical_key({proto, Ipv4Address{n}, Ipv4Address{0xc0a80001}, 1000, 80}).key;
}

TEST(FlowTable, CreatesOnceAndTracksFootprint) {
  FlowTable table;
  auto a = table.lookup_or_create(key_n(1), 0);
  EXPECT_TRUE(a.created);
  auto b = table.lookup_or_create(key_n(1), 5);
  EXPECT_FALSE(b.created);
  EXPECT_EQ(a.flow, b.flow);
  table.lookup_or_create(key_n(2, Proto::Udp), 0);
  EXPECT_EQ(table.size(), 2u);
  EXPECT_EQ(table.footprint_bytes(), table.config().tcp_flow_bytes + table.config().other_flow_bytes);
}

TEST(FlowTable, FullTableReturnsNoFlow) {
  FlowTableConfig cfg;
  cfg.max_flows = 1;
  FlowTable table(cfg);
  table.lookup_or_create(key_n(1), 0);
  EXPECT_EQ(table.lookup_or_create(key_n(2), 0).flow, nullptr);
  EXPECT_EQ(table.table_full_events(), 1u);
}

TEST(FlowTable, ReassemblyBytesCountTowardsFootprint) {
  FlowTable table;
  Flow* f = table.lookup_or_create(key_n(1), 0).flow;
  f->reassembly[0].set_base(0);
  const std::size_t before = table.footprint_bytes();
  EXPECT_TRUE(table.reassemble(*f, Direction::Forward, 10, Bytes(100, 1)).empty());
  EXPECT_EQ(table.footprint_bytes(), before + 100);
  EXPECT_EQ(table.reassemble(*f, Direction::Forward, 0, Bytes(10, 2)).size(), 110u);
  EXPECT_EQ(table.footprint_bytes(), before);
}

TEST(FlowTable, IdleFlowsExpirePerProtocol) {
  FlowTableConfig cfg;
  cfg.tcp_timeout_us = 100;
  cfg.udp_timeout_us = 10;
  FlowTable table(cfg);
  table.lookup_or_create(key_n(1), 0);
  table.lookup_or_create(key_n(2, Proto::Udp), 0);
  EXPECT_EQ(table.expire_idle(50).size(), 1u);
  EXPECT_EQ(table.size(), 1u);
  EXPECT_EQ(table.expire_idle(100).size(), 0u);
  EXPECT_EQ(table.expire_idle(101).size(), 1u);
  EXPECT_EQ(table.footprint_bytes(), 0u);
  table.lookup_or_create(key_n(3), 1000);
  EXPECT_EQ(table.expire_flows(1005, 4).size(), 1u);
}

}  // namespace
}  // namespace splitids
