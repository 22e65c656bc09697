#include "splitids/lifecycle.hpp"

#include <chrono>
#include <thread>

namespace splitids {

std::string_view to_string(LifecycleState state) {
  switch (state) {
    case LifecycleState::Uninitialized: return "uninitialized";
    case LifecycleState::Initialized: return "initialized";
    case LifecycleState::DeviceStarted: return "device-started";
    case LifecycleState::Running: return "running";
    case LifecycleState::Stopped: return "stopped";
    case LifecycleState::Shutdown: return "shutdown";
  }
  return "?";
}

std::string_view to_string(LifecycleEvent event) {
  switch (event) {
    case LifecycleEvent::Initialize: return "initialize";
    case LifecycleEvent::StartDevice: return "start_device";
    case LifecycleEvent::Acquire: return "acquire";
    case LifecycleEvent::Stop: return "stop";
    case LifecycleEvent::Shutdown: return "shutdown";
  }
  return "?";
}

OrderError::OrderError(LifecycleState from, LifecycleEvent event)
    : std::logic_error("lifecycle event '" + std::string(to_string(event)) +
                       "' is not allowed in state '" + std::string(to_string(from)) + "'"),
      from_(from),
      event_(event) {}

LifecycleState next_state(LifecycleState from, LifecycleEvent event) {
  using S = LifecycleState;
  using E = LifecycleEvent;
  switch (event) {
    case E::Initialize:
      if (from == S::Uninitialized) return S::Initialized;
      break;
    case E::StartDevice:
      if (from == S::Initialized) return S::DeviceStarted;
      break;
    case E::Acquire:
      if (from == S::DeviceStarted) return S::Running;
      break;
    case E::Stop:
      if (from == S::Running) return S::Stopped;
      break;
    case E::Shutdown:
      if (from == S::Stopped) return S::Shutdown;
      break;
  }
  throw OrderError(from, event);
}

LifecycleState Lifecycle::apply(LifecycleEvent event) {
  const LifecycleState next = next_state(state(), event);
  if (crossing_cost_us_ > 0.0) {
    std::this_thread::sleep_for(std::chrono::duration<double, std::micro>(crossing_cost_us_));
  }
  ++crossings_;
  state_.store(next, std::memory_order_release);
  return next;
}

}  // namespace splitids
