// Bounded lockless FIFO of trivially-copyable values.
//
// The ring is the only runtime channel between the acquisition side and the
// analysis side: RX rings carry pool slot ids from acquisition threads to one
// analysis worker each (many producers, one consumer) and the TX ring carries
// allowed slot ids back (many producers, many consumers).
//
// Construction follows the bounded-queue design with a per-cell sequence
// number: a producer claims a cell by advancing the tail cursor and publishes
// by bumping the cell sequence; a consumer does the mirror image on the head
// cursor. Capacity is a power of two so that positions map to cells with a
// mask.

#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <new>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>

namespace splitids {

enum class RingDiscipline : std::uint8_t {
  Mpsc,  // many producers, exactly one consumer
  Mpmc,
};

class RingConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr bool is_power_of_two(std::size_t n) {
  return n != 0 && (n & (n - 1)) == 0;
}

template <typename T>
class Ring {
  static_assert(std::is_trivially_copyable_v<T>, "ring elements are plain values");

 public:
  Ring(std::size_t capacity, RingDiscipline discipline)
      : mask_(capacity - 1), discipline_(discipline) {
    if (!is_power_of_two(capacity)) {
      throw RingConfigError("ring capacity must be a non-zero power of two, got " +
                            std::to_string(capacity));
    }
    cells_ = std::make_unique<Cell[]>(capacity);
    for (std::size_t i = 0; i < capacity; ++i) {
      cells_[i].sequence.store(i, std::memory_order_relaxed);
    }
  }

  Ring(const Ring&) = delete;
  Ring& operator=(const Ring&) = delete;

  std::size_t capacity() const { return mask_ + 1; }
  RingDiscipline discipline() const { return discipline_; }

  /// Returns false when the ring is full; the ring is left unchanged.
  bool try_enqueue(const T& value) {
    std::size_t pos = tail_.value.load(std::memory_order_relaxed);
    for (;;) {
      Cell& cell = cells_[pos & mask_];
      const std::size_t seq = cell.sequence.load(std::memory_order_acquire);
      const auto dif = static_cast<std::ptrdiff_t>(seq) - static_cast<std::ptrdiff_t>(pos);
      if (dif == 0) {
        if (tail_.value.compare_exchange_weak(pos, pos + 1, std::memory_order_relaxed)) {
          cell.value = value;
          cell.sequence.store(pos + 1, std::memory_order_release);
          return true;
        }
      } else if (dif < 0) {
        return false;
      } else {
        pos = tail_.value.load(std::memory_order_relaxed);
      }
    }
  }

  std::optional<T> try_dequeue() {
    std::size_t pos = head_.value.load(std::memory_order_relaxed);
    for (;;) {
      Cell& cell = cells_[pos & mask_];
      const std::size_t seq = cell.sequence.load(std::memory_order_acquire);
      const auto dif = static_cast<std::ptrdiff_t>(seq) - static_cast<std::ptrdiff_t>(pos + 1);
      if (dif == 0) {
        if (discipline_ == RingDiscipline::Mpsc) {
          head_.value.store(pos + 1, std::memory_order_relaxed);
        } else if (!head_.value.compare_exchange_weak(pos, pos + 1,
                                                      std::memory_order_relaxed)) {
          continue;
        }
        T out = cell.value;
        cell.sequence.store(pos + mask_ + 1, std::memory_order_release);
        return out;
      }
      if (dif < 0) {
        return std::nullopt;
      }
      pos = head_.value.load(std::memory_order_relaxed);
    }
  }

  /// Enqueues a prefix of `values`; returns how many went in.
  std::size_t enqueue_burst(std::span<const T> values) {
    std::size_t n = 0;
    while (n < values.size() && try_enqueue(values[n])) {
      ++n;
    }
    return n;
  }

  /// Dequeues up to out.size() elements, oldest first.
  std::size_t dequeue_burst(std::span<T> out) {
    std::size_t n = 0;
    while (n < out.size()) {
      auto v = try_dequeue();
      if (!v) break;
      out[n++] = *v;
    }
    return n;
  }

  /// Exact at quiescence, approximate while producers or consumers run.
  std::size_t size() const {
    const std::size_t tail = tail_.value.load(std::memory_order_acquire);
    const std::size_t head = head_.value.load(std::memory_order_acquire);
    return tail >= head ? tail - head : 0;
  }

  bool empty() const { return size() == 0; }

 private:
  static constexpr std::size_t kCacheLine = 64;

  struct Cell {
    std::atomic<std::size_t> sequence{0};
    T value{};
  };

  struct alignas(kCacheLine) Cursor {
    std::atomic<std::size_t> value{0};
  };

  std::size_t mask_;
  RingDiscipline discipline_;
  std::unique_ptr<Cell[]> cells_;
  Cursor tail_;
  Cursor head_;
};

}  // namespace splitids
