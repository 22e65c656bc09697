#include "splitids/dataplane.hpp"

#include <bit>

#include "splitids/config_error.hpp"

namespace splitids {

Dataplane::Dataplane(DataplaneConfig config)
    : config_(config), lifecycle_(config.crossing_cost_us) {
  if (config_.n_rx_rings == 0) throw ConfigError("at least one RX ring is required");
  if (!is_power_of_two(config_.rx_ring_capacity)) {
    throw ConfigError("RX ring capacity must be a power of two");
  }
  if (config_.pool_capacity == 0) {
    config_.pool_capacity = config_.n_rx_rings * config_.rx_ring_capacity + 4096;
  }
}

void Dataplane::initialize() {
  next_state(lifecycle_.state(), LifecycleEvent::Initialize);
  pool_ = std::make_unique<PacketPool>(config_.pool_capacity);
  for (std::size_t i = 0; i < config_.n_rx_rings; ++i) {
    rx_.push_back(std::make_unique<Ring<SlotId>>(config_.rx_ring_capacity, RingDiscipline::Mpsc));
    rx_ptrs_.push_back(rx_.back().get());
  }
  tx_ = std::make_unique<Ring<SlotId>>(std::bit_ceil(config_.pool_capacity), RingDiscipline::Mpmc);
  lifecycle_.apply(LifecycleEvent::Initialize);
}

void Dataplane::start_device() { lifecycle_.apply(LifecycleEvent::StartDevice); }

void Dataplane::acquire() { lifecycle_.apply(LifecycleEvent::Acquire); }

void Dataplane::stop() { lifecycle_.apply(LifecycleEvent::Stop); }

void Dataplane::shutdown() {
  next_state(lifecycle_.state(), LifecycleEvent::Shutdown);
  auto drain = [&](Ring<SlotId>& ring) {
    while (auto slot = ring.try_dequeue()) pool_->release(*slot);
  };
  for (auto& ring : rx_) drain(*ring);
  drain(*tx_);
  leaked_slots_ = pool_->in_use();
  rx_ptrs_.clear();
  rx_.clear();
  tx_.reset();
  pool_.reset();
  lifecycle_.apply(LifecycleEvent::Shutdown);
}

void Dataplane::require_allocated() const {
  if (!pool_) throw std::logic_error("dataplane memory is not allocated");
}

PacketPool& Dataplane::pool() {
  require_allocated();
  return *pool_;
}

Ring<SlotId>& Dataplane::rx(std::size_t i) {
  require_allocated();
  return *rx_.at(i);
}

std::span<Ring<SlotId>* const> Dataplane::rx_rings() {
  require_allocated();
  return rx_ptrs_;
}

Ring<SlotId>& Dataplane::tx() {
  require_allocated();
  return *tx_;
}

}  // namespace splitids
