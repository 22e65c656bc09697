// Case-folded multi-pattern matcher used by the detection prefilter.
//
// Patterns and text are compared after ASCII lower-casing, so a hit is a
// superset of the case-sensitive hits. The automaton is a full DFA over a
// compressed alphabet: bytes that occur in no pattern share one class.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace splitids {

inline constexpr std::uint8_t ascii_fold(std::uint8_t b) {
  return (b >= 'A' && b <= 'Z') ? static_cast<std::uint8_t>(b + ('a' - 'A')) : b;
}

class AhoCorasick {
 public:
  AhoCorasick() = default;
  /// Pattern i reports id i. Empty patterns are ignored.
  explicit AhoCorasick(const std::vector<std::vector<std::uint8_t>>& patterns);

  /// Calls on_match(pattern_id) for every occurrence ending in `text`.
  template <typename F>
  void scan(std::span<const std::uint8_t> text, F&& on_match) const {
    if (patterns_ == 0) return;
    std::uint32_t state = 0;
    for (std::uint8_t b : text) {
      state = delta_[state * n_classes_ + byte_class_[b]];
      for (std::uint32_t s = has_output_[state] ? state : output_link_[state]; s != kNone;
           s = output_link_[s]) {
        for (std::uint32_t i = output_begin_[s]; i < output_begin_[s + 1]; ++i) {
          on_match(outputs_[i]);
        }
      }
    }
  }

  std::size_t pattern_count() const { return patterns_; }
  std::size_t state_count() const { return has_output_.size(); }
  std::size_t class_count() const { return n_classes_; }

 private:
  static constexpr std::uint32_t kNone = 0xffffffffu;

  std::size_t patterns_ = 0;
  std::uint32_t n_classes_ = 1;
  std::array<std::uint32_t, 256> byte_class_{};
  std::vector<std::uint32_t> delta_;        // state * n_classes_ + class -> state
  std::vector<std::uint32_t> output_link_;  // nearest proper suffix state with output
  std::vector<std::uint8_t> has_output_;
  std::vector<std::uint32_t> output_begin_;  // CSR offsets into outputs_
  std::vector<std::uint32_t> outputs_;
};

}  // namespace splitids
