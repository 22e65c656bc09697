// Startup/teardown calls between the analysis engine and the untrusted
// packet-acquisition layer. These five transitions are the only synchronous
// boundary crossings; at runtime the two sides talk through rings only.

#pragma once

#include <atomic>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace splitids {

enum class LifecycleState : std::uint8_t {
  Uninitialized,
  Initialized,
  DeviceStarted,
  Running,
  Stopped,
  Shutdown,
};

enum class LifecycleEvent : std::uint8_t {
  Initialize,
  StartDevice,
  Acquire,
  Stop,
  Shutdown,
};

std::string_view to_string(LifecycleState state);
std::string_view to_string(LifecycleEvent event);

class OrderError : public std::logic_error {
 public:
  OrderError(LifecycleState from, LifecycleEvent event);

  LifecycleState from() const { return from_; }
  LifecycleEvent event() const { return event_; }

 private:
  LifecycleState from_;
  LifecycleEvent event_;
};

/// Pure transition function; throws OrderError for any out-of-order event.
LifecycleState next_state(LifecycleState from, LifecycleEvent event);

class Lifecycle {
 public:
  /// Every transition stalls the caller for `crossing_cost_us`.
  explicit Lifecycle(double crossing_cost_us = 0.0) : crossing_cost_us_(crossing_cost_us) {}

  LifecycleState state() const { return state_.load(std::memory_order_acquire); }
  LifecycleState apply(LifecycleEvent event);

  std::uint32_t crossings() const { return crossings_; }

 private:
  std::atomic<LifecycleState> state_{LifecycleState::Uninitialized};
  double crossing_cost_us_;
  std::uint32_t crossings_ = 0;
};

}  // namespace splitids
