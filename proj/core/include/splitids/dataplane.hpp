// Shared packet memory (pool, RX rings, TX ring) whose allocation and
// release are driven by the lifecycle events.

#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "splitids/lifecycle.hpp"
#include "splitids/packet.hpp"
#include "splitids/ring.hpp"

namespace splitids {

struct DataplaneConfig {
  std::size_t n_rx_rings = 1;
  std::size_t rx_ring_capacity = 4096;  // power of two
  /// 0 sizes the pool to hold every RX ring full plus 4096 in-flight slots.
  std::size_t pool_capacity = 0;
  double crossing_cost_us = 0.0;
};

class Dataplane {
 public:
  explicit Dataplane(DataplaneConfig config);

  /// Allocates the pool, the MPSC RX rings and the MPMC TX ring. The TX
  /// ring holds at least as many entries as the pool, so it never fills.
  void initialize();
  void start_device();
  void acquire();
  void stop();
  /// Returns every queued slot to the pool and frees all memory. Slots
  /// still held elsewhere at this point are reported by leaked_slots().
  void shutdown();

  LifecycleState state() const { return lifecycle_.state(); }
  const Lifecycle& lifecycle() const { return lifecycle_; }
  const DataplaneConfig& config() const { return config_; }

  /// Valid between initialize() and shutdown(); throws std::logic_error
  /// otherwise.
  PacketPool& pool();
  Ring<SlotId>& rx(std::size_t i);
  std::span<Ring<SlotId>* const> rx_rings();
  Ring<SlotId>& tx();

  std::size_t leaked_slots() const { return leaked_slots_; }

 private:
  void require_allocated() const;

  DataplaneConfig config_;
  Lifecycle lifecycle_;
  std::unique_ptr<PacketPool> pool_;
  std::vector<std::unique_ptr<Ring<SlotId>>> rx_;
  std::vector<Ring<SlotId>*> rx_ptrs_;
  std::unique_ptr<Ring<SlotId>> tx_;
  std::size_t leaked_slots_ = 0;
};

}  // namespace splitids
