#include <gtest/gtest.h>

#include <thread>
#include <vector>

#include "splitids/clock.hpp"

namespace splitids {
namespace {

TEST(Clock, TickConversionIsFloorDivision) {
  EXPECT_EQ(ClockSource::ticks_to_us(3785, 3785.0), 1u);
  EXPECT_EQ(ClockSource::ticks_to_us(3784, 3785.0), 0u);
  EXPECT_EQ(ClockSource::ticks_to_us(7570, 3785.0), 2u);
  EXPECT_EQ(ClockSource::ticks_to_us(0, 3785.0), 0u);
}

TEST(Clock, InvalidFrequencyIsRejected) {
  EXPECT_THROW(ClockSource(0.0), ClockError);
  EXPECT_THROW(ClockSource(-1.0), ClockError);
}

TEST(Clock, SimulatedClockMovesOnlyWhenTold) {
  auto clock = ClockSource::simulated(10.0);
  EXPECT_EQ(clock.gettime_us(), 0u);
  clock.advance_ticks(25);
  EXPECT_EQ(clock.gettime_us(), 2u);
  clock.advance_to_us(100);
  EXPECT_EQ(clock.ticks(), 1000u);
  clock.advance_to_ticks(10);  // never backwards
  EXPECT_EQ(clock.ticks(), 1000u);
  clock.start();  // no-op for a simulated clock
  EXPECT_EQ(clock.ticks(), 1000u);
}

TEST(Clock, CounterClockMustBeStartedOnce) {
  ClockSource clock;
  EXPECT_THROW(clock.gettime_us(), ClockError);
  EXPECT_THROW(clock.advance_ticks(1), ClockError);
  clock.start();
  EXPECT_TRUE(clock.running());
  EXPECT_THROW(clock.start(), ClockError);
  clock.stop();
  EXPECT_FALSE(clock.running());
  EXPECT_THROW(clock.start(), ClockError);
  const auto frozen = clock.ticks();
  EXPECT_EQ(clock.ticks(), frozen);
}

TEST(Clock, CounterAdvancesAndReadersSeeMonotoneTime) {
  ClockSource clock;
  clock.start();
  std::vector<std::jthread> readers;
  std::vector<int> ok(2, 1);
  for (int r = 0; r < 2; ++r) {
    readers.emplace_back([&, r] {
      std::uint64_t last = 0;
      for (int i = 0; i < 50'000; ++i) {
        const auto now = clock.gettime_us();
        if (now < last) ok[r] = 0;
        last = now;
      }
    });
  }
  readers.clear();
  const auto t0 = clock.ticks();
  while (clock.ticks() == t0) std::this_thread::yield();
  clock.stop();
  EXPECT_EQ(ok, (std::vector<int>{1, 1}));
}

}  // namespace
}  // namespace splitids
