// Trusted clock: a counter bumped by a dedicated thread, converted to
// microseconds with a fixed ticks-per-microsecond coefficient. It is the
// engine's only time source; nothing on the analysis path reads wall time.
//
// A simulated variant advances only when told to, so experiments and timeout
// tests are exactly reproducible. Readers cannot tell the two apart.

#pragma once

#include <atomic>
#include <cstdint>
#include <stdexcept>
#include <thread>

namespace splitids {

inline constexpr double kDefaultCpuFreq = 3785.0;

class ClockError : public std::logic_error {
 public:
  enum class Kind { AlreadyRunning, NotStarted, NotSimulated, InvalidFrequency };

  ClockError(Kind kind, const char* what) : std::logic_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

enum class ClockMode : std::uint8_t { Counter, Simulated };

class ClockSource {
 public:
  explicit ClockSource(double cpufreq = kDefaultCpuFreq,
                       ClockMode mode = ClockMode::Counter);
  ~ClockSource();

  ClockSource(const ClockSource&) = delete;
  ClockSource& operator=(const ClockSource&) = delete;

  static ClockSource simulated(double cpufreq = kDefaultCpuFreq) {
    return ClockSource(cpufreq, ClockMode::Simulated);
  }

  /// Counter mode: launches the incrementer thread from zero. A second start
  /// on the same source throws AlreadyRunning, even after stop().
  void start();
  void stop();
  bool running() const { return running_.load(std::memory_order_acquire); }

  ClockMode mode() const { return mode_; }
  double cpufreq() const { return cpufreq_; }

  std::uint64_t ticks() const { return counter_.load(std::memory_order_acquire); }

  /// floor(ticks / cpufreq). Throws NotStarted if a counter clock was never
  /// started.
  std::uint64_t gettime_us() const;

  static std::uint64_t ticks_to_us(std::uint64_t ticks, double cpufreq) {
    return static_cast<std::uint64_t>(static_cast<double>(ticks) / cpufreq);
  }

  /// Simulated mode only. Never moves the counter backwards.
  void advance_ticks(std::uint64_t delta);
  void advance_to_ticks(std::uint64_t ticks);
  void advance_to_us(std::uint64_t us);

 private:
  void require_simulated() const;

  double cpufreq_;
  ClockMode mode_;
  std::atomic<std::uint64_t> counter_{0};
  std::atomic<bool> running_{false};
  bool started_once_ = false;
  std::jthread thread_;
};

}  // namespace splitids
