#include "splitids/clock.hpp"

#include <cmath>

namespace splitids {

ClockSource::ClockSource(double cpufreq, ClockMode mode) : cpufreq_(cpufreq), mode_(mode) {
  if (!(cpufreq > 0.0) || !std::isfinite(cpufreq)) {
    throw ClockError(ClockError::Kind::InvalidFrequency, "cpufreq must be positive");
  }
  if (mode_ == ClockMode::Simulated) {
    started_once_ = true;
  }
}

ClockSource::~ClockSource() { stop(); }

void ClockSource::start() {
  if (mode_ == ClockMode::Simulated) {
    return;
  }
  if (started_once_) {
    throw ClockError(ClockError::Kind::AlreadyRunning, "clock already started");
  }
  started_once_ = true;
  counter_.store(0, std::memory_order_release);
  running_.store(true, std::memory_order_release);
  thread_ = std::jthread([this](std::stop_token token) {
    std::uint64_t value = counter_.load(std::memory_order_relaxed);
    while (!token.stop_requested()) {
      for (int i = 0; i < 4096; ++i) {
        counter_.store(++value, std::memory_order_release);
      }
    }
  });
}

void ClockSource::stop() {
  if (thread_.joinable()) {
    thread_.request_stop();
    thread_.join();
  }
  running_.store(false, std::memory_order_release);
}

std::uint64_t ClockSource::gettime_us() const {
  if (!started_once_) {
    throw ClockError(ClockError::Kind::NotStarted, "clock not started");
  }
  return ticks_to_us(ticks(), cpufreq_);
}

void ClockSource::require_simulated() const {
  if (mode_ != ClockMode::Simulated) {
    throw ClockError(ClockError::Kind::NotSimulated, "clock is not in simulated mode");
  }
}

void ClockSource::advance_ticks(std::uint64_t delta) {
  require_simulated();
  counter_.fetch_add(delta, std::memory_order_acq_rel);
}

void ClockSource::advance_to_ticks(std::uint64_t ticks) {
  require_simulated();
  std::uint64_t current = counter_.load(std::memory_order_relaxed);
  while (current < ticks &&
         !counter_.compare_exchange_weak(current, ticks, std::memory_order_acq_rel)) {
  }
}

void ClockSource::advance_to_us(std::uint64_t us) {
  advance_to_ticks(static_cast<std::uint64_t>(std::ceil(static_cast<double>(us) * cpufreq_)));
}

}  // namespace splitids
