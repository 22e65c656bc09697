#include <gtest/gtest.h>

#include <string_view>

#include "splitids/acquire.hpp"
#include "splitids/dataplane.hpp"
#include "splitids/workload.hpp"

namespace splitids {
namespace {

std::span<const std::uint8_t> bytes_of(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

TEST(Murmur3, PublishedVectors) {
  EXPECT_EQ(murmur3_32(bytes_of("")), 0u);
  EXPECT_EQ(murmur3_32(bytes_of(""), 1), 0x514e28b7u);
  EXPECT_EQ(murmur3_32(bytes_of("hello")), 0x248bfa47u);
  EXPECT_EQ(murmur3_32(bytes_of("The quick brown fox jumps over the lazy dog")), 0x2e4ff723u);
}

TEST(RssHash, GoldenVector) {
  // Computed once with an independent implementation over the 13-byte key
  // 00 0a000001 0a000002 04d2 0050.
  const FiveTuple t{Proto::Tcp, Ipv4Address::from_octets(10, 0, 0, 1),
                    Ipv4Address::from_octets(10, 0, 0, 2), 1234, 80};
  EXPECT_EQ(rss_hash(t), 0xee4796c4u);
}

TEST(RssHash, SymmetricOverManyTuples) {
  for (std::uint32_t i = 0; i < 5000; ++i) {
    const FiveTuple t{static_cast<Proto>(i % 4), Ipv4Address{0x0a000000u + i * 7919u},
                      Ipv4Address{0xc0a80000u + i * 104729u},
                      static_cast<std::uint16_t>(1024 + i), static_cast<std::uint16_t>(i * 31)};
    ASSERT_EQ(rss_hash(t), rss_hash(t.reversed()));
  }
}

TEST(SelectRing, StaysInRange) {
  for (std::size_t n = 1; n <= 8; ++n) {
    for (std::uint32_t h = 0; h < 256; ++h) ASSERT_LT(select_ring(h * 2654435761u, n), n);
  }
  EXPECT_EQ(select_ring(0xffffffffu, 4), 63u % 4);
}

TEST(DispatchConfig, ZeroCountsAreConfigErrors) {
  DispatchConfig c;
  c.n_rx_rings = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.burst_size = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.n_acquire_threads = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

class AcquirerTest : public ::testing::Test {
 protected:
  void bring_up(std::size_t rings, std::size_t capacity, bool inline_mode) {
    dp_ = std::make_unique<Dataplane>(DataplaneConfig{rings, capacity, 0, 0.0});
    dp_->initialize();
    DispatchConfig dc;
    dc.n_rx_rings = rings;
    dc.inline_mode = inline_mode;
    acq_ = std::make_unique<Acquirer>(dc, dp_->pool(), dp_->rx_rings(), &dp_->tx(),
                                      dp_->lifecycle(), clock_);
  }

  ClockSource clock_{kDefaultCpuFreq, ClockMode::Simulated};
  std::unique_ptr<Dataplane> dp_;
  std::unique_ptr<Acquirer> acq_;
};

TEST_F(AcquirerTest, StepDoesNothingUntilRunning) {
  bring_up(2, 16, false);
  auto frames = std::make_shared<FrameList>(
      tcp_session({Proto::Tcp, Ipv4Address{1}, Ipv4Address{2}, 1000, 80}, {}));
  MemorySource source(frames);
  EXPECT_EQ(acq_->step(source, nullptr).status, StepStatus::NotRunning);
  dp_->start_device();
  EXPECT_EQ(acq_->step(source, nullptr).status, StepStatus::NotRunning);
  dp_->acquire();
  const auto r = acq_->step(source, nullptr);
  EXPECT_EQ(r.moved, 4u);
  EXPECT_EQ(acq_->stats().received.get(), 4u);
  EXPECT_EQ(acq_->stats().enqueued.get(), 4u);
  EXPECT_EQ(acq_->step(source, nullptr).status, StepStatus::SourceExhausted);
}

TEST_F(AcquirerTest, BothDirectionsLandOnOneRing) {
  bring_up(4, 64, false);
  dp_->start_device();
  dp_->acquire();
  const FiveTuple c2s{Proto::Tcp, Ipv4Address{0x0a000001}, Ipv4Address{0x0a000002}, 4321, 443};
  std::size_t first = 99;
  for (const auto& frame : tcp_session(c2s, heartbeat_payload(0x90))) {
    std::size_t ring = 99;
    ASSERT_EQ(acq_->ingest(frame, 0, &ring), IngestOutcome::Enqueued);
    if (first == 99) first = ring;
    EXPECT_EQ(ring, first);
  }
  EXPECT_EQ(first, select_ring(rss_hash(c2s), 4));
  EXPECT_EQ(dp_->rx(first).size(), 4u);
}

TEST_F(AcquirerTest, FullRingDropsAndReleasesTheSlot) {
  bring_up(1, 2, false);
  dp_->start_device();
  dp_->acquire();
  const auto frame = tcp_session({Proto::Tcp, Ipv4Address{1}, Ipv4Address{2}, 1, 2}, {})[0];
  EXPECT_EQ(acq_->ingest(frame, 0), IngestOutcome::Enqueued);
  EXPECT_EQ(acq_->ingest(frame, 0), IngestOutcome::Enqueued);
  EXPECT_EQ(acq_->ingest(frame, 0), IngestOutcome::RingFull);
  EXPECT_EQ(acq_->stats().dropped.get(), 1u);
  EXPECT_EQ(dp_->pool().in_use(), 2u);
}

TEST_F(AcquirerTest, DecodeFailuresAndNonIpv4AreCounted) {
  bring_up(1, 8, false);
  dp_->start_device();
  dp_->acquire();
  const std::vector<std::uint8_t> runt(10, 0);
  EXPECT_EQ(acq_->ingest(runt, 0), IngestOutcome::DecodeFailed);
  auto frame = tcp_session({Proto::Tcp, Ipv4Address{1}, Ipv4Address{2}, 1, 2}, {})[0];
  frame[12] = 0x08;
  frame[13] = 0x06;  // ARP
  EXPECT_EQ(acq_->ingest(frame, 0), IngestOutcome::UnsupportedL3);
  EXPECT_EQ(acq_->stats().decode_failed.get(), 1u);
  EXPECT_EQ(acq_->stats().unsupported_l3.get(), 1u);
  EXPECT_EQ(dp_->pool().in_use(), 0u);
}

TEST_F(AcquirerTest, TxDrainWritesAndFreesInInlineModeOnly) {
  bring_up(1, 8, true);
  dp_->start_device();
  dp_->acquire();
  const auto frame = tcp_session({Proto::Tcp, Ipv4Address{1}, Ipv4Address{2}, 1, 2}, {})[0];
  ASSERT_EQ(acq_->ingest(frame, 0), IngestOutcome::Enqueued);
  const SlotId slot = *dp_->rx(0).try_dequeue();
  ASSERT_TRUE(dp_->tx().try_enqueue(slot));
  MemorySink sink;
  EXPECT_EQ(acq_->drain_tx(&sink), 1u);
  ASSERT_EQ(sink.frames.size(), 1u);
  EXPECT_EQ(sink.frames[0], frame);
  EXPECT_EQ(dp_->pool().in_use(), 0u);
  EXPECT_EQ(acq_->stats().tx_sent.get(), 1u);
}

}  // namespace
}  // namespace splitids
