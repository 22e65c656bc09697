#include "splitids/aho_corasick.hpp"

#include <deque>

namespace splitids {

AhoCorasick::AhoCorasick(const std::vector<std::vector<std::uint8_t>>& patterns) {
  // Alphabet compression: class 0 is every byte absent from all patterns.
  for (const auto& p : patterns) {
    for (std::uint8_t b : p) {
      const std::uint8_t f = ascii_fold(b);
      if (byte_class_[f] == 0) byte_class_[f] = n_classes_++;
    }
  }
  for (int b = 'A'; b <= 'Z'; ++b) byte_class_[b] = byte_class_[ascii_fold(static_cast<std::uint8_t>(b))];

  // Trie with goto edges; kNone marks a missing edge.
  std::vector<std::uint32_t> go(n_classes_, kNone);
  std::vector<std::vector<std::uint32_t>> out(1);
  for (std::size_t id = 0; id < patterns.size(); ++id) {
    const auto& p = patterns[id];
    if (p.empty()) continue;
    ++patterns_;
    std::uint32_t s = 0;
    for (std::uint8_t b : p) {
      const std::uint32_t c = byte_class_[ascii_fold(b)];
      std::uint32_t& next = go[s * n_classes_ + c];
      if (next == kNone) {
        next = static_cast<std::uint32_t>(out.size());
        out.emplace_back();
        go.resize(go.size() + n_classes_, kNone);
      }
      s = go[s * n_classes_ + c];
    }
    out[s].push_back(static_cast<std::uint32_t>(id));
  }

  const std::size_t n_states = out.size();
  std::vector<std::uint32_t> fail(n_states, 0);
  output_link_.assign(n_states, kNone);
  has_output_.assign(n_states, 0);
  for (std::size_t s = 0; s < n_states; ++s) has_output_[s] = out[s].empty() ? 0 : 1;

  // BFS turns the trie into a DFA: missing edges borrow the fail state's edge.
  std::deque<std::uint32_t> queue;
  for (std::uint32_t c = 0; c < n_classes_; ++c) {
    std::uint32_t& next = go[c];
    if (next == kNone) {
      next = 0;
    } else {
      fail[next] = 0;
      queue.push_back(next);
    }
  }
  while (!queue.empty()) {
    const std::uint32_t s = queue.front();
    queue.pop_front();
    const std::uint32_t f = fail[s];
    output_link_[s] = has_output_[f] ? f : output_link_[f];
    for (std::uint32_t c = 0; c < n_classes_; ++c) {
      std::uint32_t& next = go[s * n_classes_ + c];
      if (next == kNone) {
        next = go[f * n_classes_ + c];
      } else {
        fail[next] = go[f * n_classes_ + c];
        queue.push_back(next);
      }
    }
  }
  delta_ = std::move(go);

  output_begin_.reserve(n_states + 1);
  for (std::size_t s = 0; s < n_states; ++s) {
    output_begin_.push_back(static_cast<std::uint32_t>(outputs_.size()));
    outputs_.insert(outputs_.end(), out[s].begin(), out[s].end());
  }
  output_begin_.push_back(static_cast<std::uint32_t>(outputs_.size()));
}

}  // namespace splitids
