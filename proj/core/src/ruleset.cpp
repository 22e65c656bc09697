#include "splitids/ruleset.hpp"

namespace splitids {

namespace {

struct GroupBuilder {
  std::vector<std::vector<std::uint8_t>> patterns;
  std::vector<std::uint32_t> pattern_rule;
  std::vector<std::uint32_t> contentless;

  RuleGroup build() const {
    RuleGroup g;
    g.automaton = AhoCorasick(patterns);
    g.pattern_rule = pattern_rule;
    g.contentless = contentless;
    return g;
  }
};

void add_to(GroupBuilder& g, const Rule& rule, std::uint32_t id, std::size_t fp) {
  if (fp == kNoFastPattern) {
    g.contentless.push_back(id);
  } else {
    g.patterns.push_back(std::get<ContentOption>(rule.options[fp]).pattern);
    g.pattern_rule.push_back(id);
  }
}

}  // namespace

std::size_t select_fast_pattern(const Rule& rule) {
  std::size_t best = kNoFastPattern;
  std::size_t best_len = 0;
  for (std::size_t i = 0; i < rule.options.size(); ++i) {
    const auto* c = std::get_if<ContentOption>(&rule.options[i]);
    if (c == nullptr || c->negated) continue;
    if (c->pattern.size() > best_len) {
      best = i;
      best_len = c->pattern.size();
    }
  }
  return best;
}

CompiledRuleSet::CompiledRuleSet(const RuleSet& rules, const Variables& vars) {
  struct ProtoBuilders {
    std::unordered_map<std::uint16_t, GroupBuilder> by_src, by_dst;
    GroupBuilder any;
  };
  ProtoBuilders tcp, udp, icmp;
  GroupBuilder ip;

  rules_.reserve(rules.size());
  for (const Rule& original : rules.rules) {
    Rule rule = original;
    rule.src_net = resolve(rule.src_net, vars);
    rule.dst_net = resolve(rule.dst_net, vars);
    rule.src_ports = resolve(rule.src_ports, vars);
    rule.dst_ports = resolve(rule.dst_ports, vars);

    const auto id = static_cast<std::uint32_t>(rules_.size());
    const std::size_t fp = select_fast_pattern(rule);
    fast_pattern_.push_back(fp);
    if (fp == kNoFastPattern) contentless_.push_back(id);

    ProtoBuilders* pb = nullptr;
    switch (rule.proto) {
      case RuleProto::Tcp: pb = &tcp; break;
      case RuleProto::Udp: pb = &udp; break;
      case RuleProto::Icmp: pb = &icmp; break;
      case RuleProto::Ip: break;
    }
    if (pb == nullptr) {
      add_to(ip, rule, id, fp);
    } else if (rule.direction == RuleDirection::Bidirectional) {
      add_to(pb->any, rule, id, fp);
    } else if (auto dst = rule.dst_ports.enumerate(kMaxGroupPorts)) {
      for (auto port : *dst) add_to(pb->by_dst[port], rule, id, fp);
    } else if (auto src = rule.src_ports.enumerate(kMaxGroupPorts)) {
      for (auto port : *src) add_to(pb->by_src[port], rule, id, fp);
    } else {
      add_to(pb->any, rule, id, fp);
    }
    rules_.push_back(std::move(rule));
  }

  auto finish = [](ProtoBuilders& b, ProtoGroups& g) {
    for (auto& [port, builder] : b.by_src) g.by_src.emplace(port, builder.build());
    for (auto& [port, builder] : b.by_dst) g.by_dst.emplace(port, builder.build());
    g.any = b.any.build();
  };
  finish(tcp, tcp_);
  finish(udp, udp_);
  finish(icmp, icmp_);
  ip_ = ip.build();
}

std::size_t CompiledRuleSet::groups_for(Proto proto, std::uint16_t src_port,
                                        std::uint16_t dst_port,
                                        const RuleGroup* (&out)[4]) const {
  std::size_t n = 0;
  const ProtoGroups* g = nullptr;
  switch (proto) {
    case Proto::Tcp: g = &tcp_; break;
    case Proto::Udp: g = &udp_; break;
    case Proto::Icmp: g = &icmp_; break;
    case Proto::Other: break;
  }
  if (g != nullptr) {
    if (auto it = g->by_src.find(src_port); it != g->by_src.end()) out[n++] = &it->second;
    if (auto it = g->by_dst.find(dst_port); it != g->by_dst.end()) out[n++] = &it->second;
    out[n++] = &g->any;
  }
  out[n++] = &ip_;
  return n;
}

std::size_t CompiledRuleSet::group_count() const {
  std::size_t n = 1;
  for (const auto* g : {&tcp_, &udp_, &icmp_}) n += 1 + g->by_src.size() + g->by_dst.size();
  return n;
}

}  // namespace splitids
