// Deterministic generator of community-style rule text, for corpora and
// benchmarks.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace splitids {

struct RuleGenOptions {
  std::uint32_t first_sid = 1'000'001;
  /// Alphabet for content bytes; short alphabets make random traffic hit.
  std::string alphabet = "abcdefghijklmnopqrstuvwxyz";
};

/// `n` rule lines using every supported option kind, reproducible per seed.
std::vector<std::string> generate_rules(std::size_t n, std::uint64_t seed,
                                        const RuleGenOptions& options = {});

}  // namespace splitids
