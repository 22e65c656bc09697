// Compiled ruleset: rules with variables resolved, grouped by protocol and
// port, each group carrying an automaton over its rules' fast patterns.
// Immutable after construction and shared read-only by analysis workers.

#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <unordered_map>
#include <vector>

#include "splitids/aho_corasick.hpp"
#include "splitids/rules.hpp"

namespace splitids {

inline constexpr std::size_t kNoFastPattern = static_cast<std::size_t>(-1);
/// A port spec with more ports than this goes to the protocol-wide group.
inline constexpr std::size_t kMaxGroupPorts = 64;

/// Index into Rule::options of the longest non-negated content, or
/// kNoFastPattern. Ties go to the first such content.
std::size_t select_fast_pattern(const Rule& rule);

struct RuleGroup {
  AhoCorasick automaton;
  std::vector<std::uint32_t> pattern_rule;  // automaton pattern id -> rule id
  std::vector<std::uint32_t> contentless;   // rule ids
};

class CompiledRuleSet {
 public:
  CompiledRuleSet() : CompiledRuleSet(RuleSet{}) {}
  explicit CompiledRuleSet(const RuleSet& rules, const Variables& vars = {});

  CompiledRuleSet(CompiledRuleSet&&) noexcept = default;
  CompiledRuleSet& operator=(CompiledRuleSet&&) noexcept = default;

  std::size_t size() const { return rules_.size(); }
  bool empty() const { return rules_.empty(); }
  const Rule& rule(std::uint32_t id) const { return rules_[id]; }
  const std::vector<Rule>& rules() const { return rules_; }
  std::size_t fast_pattern(std::uint32_t id) const { return fast_pattern_[id]; }
  /// Rule ids with no usable fast pattern, in id order.
  const std::vector<std::uint32_t>& contentless() const { return contentless_; }

  /// Groups that can hold candidates for a packet, at most four: the
  /// protocol's source-port and destination-port groups, the protocol-wide
  /// group and the `ip` group.
  std::size_t groups_for(Proto proto, std::uint16_t src_port, std::uint16_t dst_port,
                         const RuleGroup* (&out)[4]) const;

  std::size_t group_count() const;

 private:
  struct ProtoGroups {
    std::unordered_map<std::uint16_t, RuleGroup> by_src;
    std::unordered_map<std::uint16_t, RuleGroup> by_dst;
    RuleGroup any;
  };

  std::vector<Rule> rules_;
  std::vector<std::size_t> fast_pattern_;
  std::vector<std::uint32_t> contentless_;
  ProtoGroups tcp_, udp_, icmp_;
  RuleGroup ip_;
};

}  // namespace splitids
