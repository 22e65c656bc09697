#include "splitids/detect.hpp"

#include <algorithm>
#include <thread>

namespace splitids {

namespace {

bool proto_matches(RuleProto rule, Proto packet) {
  switch (rule) {
    case RuleProto::Ip: return true;
    case RuleProto::Tcp: return packet == Proto::Tcp;
    case RuleProto::Udp: return packet == Proto::Udp;
    case RuleProto::Icmp: return packet == Proto::Icmp;
  }
  return false;
}

bool oriented_match(const Rule& rule, Ipv4Address src, std::uint16_t sport, Ipv4Address dst,
                    std::uint16_t dport) {
  return rule.src_net.matches(src) && rule.src_ports.matches(sport) &&
         rule.dst_net.matches(dst) && rule.dst_ports.matches(dport);
}

bool bytes_equal(const std::uint8_t* text, const std::vector<std::uint8_t>& pattern, bool nocase) {
  if (!nocase) return std::equal(pattern.begin(), pattern.end(), text);
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    if (ascii_fold(text[i]) != ascii_fold(pattern[i])) return false;
  }
  return true;
}

bool flow_holds(const FlowOption& f, const PacketContext& ctx) {
  if (f.stateless) return true;
  if (f.direction == FlowDirection::Any && !f.established) return true;
  if (ctx.flow == nullptr) return false;
  if (f.established && ctx.flow->state != FlowState::Established &&
      ctx.flow->state != FlowState::Closing) {
    return false;
  }
  const bool to_server = ctx.flow->to_server(ctx.direction);
  if (f.direction == FlowDirection::ToServer && !to_server) return false;
  if (f.direction == FlowDirection::ToClient && to_server) return false;
  return true;
}

std::uint64_t read_be(std::span<const std::uint8_t> buf, std::size_t pos, std::size_t n) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < n; ++i) v = (v << 8) | buf[pos + i];
  return v;
}

// Options from index i onwards, with the relative anchor at `anchor`.
bool eval_from(const Rule& rule, std::size_t i, std::span<const std::uint8_t> buf,
               std::int64_t anchor, const PacketContext& ctx) {
  for (; i < rule.options.size(); ++i) {
    const auto& option = rule.options[i];
    if (const auto* c = std::get_if<ContentOption>(&option)) {
      const auto size = static_cast<std::int64_t>(buf.size());
      const auto len = static_cast<std::int64_t>(c->pattern.size());
      const std::int64_t origin = (c->relative ? anchor : 0) + c->offset.value_or(0);
      const std::int64_t limit = c->depth ? std::min(size, origin + *c->depth) : size;
      const std::int64_t first = std::max<std::int64_t>(origin, 0);
      if (c->negated) {
        for (std::int64_t p = first; p + len <= limit; ++p) {
          if (bytes_equal(buf.data() + p, c->pattern, c->nocase)) return false;
        }
        continue;
      }
      for (std::int64_t p = first; p + len <= limit; ++p) {
        if (bytes_equal(buf.data() + p, c->pattern, c->nocase) &&
            eval_from(rule, i + 1, buf, p + len, ctx)) {
          return true;
        }
      }
      return false;
    }
    if (const auto* bt = std::get_if<ByteTestOption>(&option)) {
      const std::int64_t pos = (bt->relative ? anchor : 0) + bt->offset;
      if (pos < 0 || pos + bt->nbytes > static_cast<std::int64_t>(buf.size())) return false;
      const std::uint64_t v = read_be(buf, static_cast<std::size_t>(pos), bt->nbytes);
      const bool ok = bt->op == ByteTestOp::Greater ? v > bt->value
                      : bt->op == ByteTestOp::Less  ? v < bt->value
                                                    : v == bt->value;
      if (!ok) return false;
      continue;
    }
    if (const auto* f = std::get_if<FlowOption>(&option)) {
      if (!flow_holds(*f, ctx)) return false;
    }
    // Opaque options hold vacuously.
  }
  return true;
}

bool rule_blocks(const Rule& rule) {
  return rule.action == RuleAction::Drop || rule.has_drop_policy();
}

}  // namespace

bool header_matches(const Rule& rule, const FiveTuple& t) {
  if (!proto_matches(rule.proto, t.proto)) return false;
  if (oriented_match(rule, t.src_ip, t.src_port, t.dst_ip, t.dst_port)) return true;
  return rule.direction == RuleDirection::Bidirectional &&
         oriented_match(rule, t.dst_ip, t.dst_port, t.src_ip, t.src_port);
}

bool evaluate_rule(const Rule& rule, const PacketContext& ctx) {
  if (ctx.desc == nullptr || !header_matches(rule, ctx.desc->tuple)) return false;
  if (rule.only_stream()) {
    if (ctx.stream.empty()) return false;
    return eval_from(rule, 0, ctx.stream, 0, ctx);
  }
  return eval_from(rule, 0, ctx.payload, 0, ctx);
}

bool PrefilterScratch::mark(std::uint32_t id) {
  if (stamp_[id] == epoch_) return false;
  stamp_[id] = epoch_;
  return true;
}

void PrefilterScratch::reset(std::size_t n_rules) {
  ids.clear();
  if (stamp_.size() < n_rules) stamp_.resize(n_rules, 0);
  if (++epoch_ == 0) {
    std::fill(stamp_.begin(), stamp_.end(), 0);
    epoch_ = 1;
  }
}

void prefilter(const CompiledRuleSet& rules, const PacketContext& ctx, PrefilterScratch& scratch) {
  scratch.reset(rules.size());
  if (ctx.desc == nullptr || rules.empty()) return;
  const FiveTuple& t = ctx.desc->tuple;
  const RuleGroup* groups[4];
  const std::size_t n = rules.groups_for(t.proto, t.src_port, t.dst_port, groups);

  auto consider = [&](std::uint32_t id) {
    if (scratch.mark(id) && header_matches(rules.rule(id), t)) scratch.ids.push_back(id);
  };
  for (std::size_t g = 0; g < n; ++g) {
    const RuleGroup& group = *groups[g];
    auto hit = [&](std::uint32_t pattern) { consider(group.pattern_rule[pattern]); };
    group.automaton.scan(ctx.payload, hit);
    group.automaton.scan(ctx.stream, hit);
    for (std::uint32_t id : group.contentless) consider(id);
  }
  std::sort(scratch.ids.begin(), scratch.ids.end());
}

std::vector<std::uint32_t> evaluate_all(const CompiledRuleSet& rules, const PacketContext& ctx) {
  std::vector<std::uint32_t> out;
  for (std::uint32_t id = 0; id < rules.size(); ++id) {
    if (evaluate_rule(rules.rule(id), ctx)) out.push_back(id);
  }
  return out;
}

AnalysisWorker::AnalysisWorker(const CompiledRuleSet& rules, PacketPool& pool,
                               const ClockSource& clock, AlertSink& alerts, Ring<SlotId>* tx,
                               WorkerConfig config)
    : rules_(rules),
      pool_(pool),
      clock_(clock),
      alerts_(alerts),
      tx_(tx),
      config_(config),
      flows_(config.flows) {}

ProcessResult AnalysisWorker::process_packet(SlotId slot) {
  ProcessResult result;
  result.verdict = config_.useless_mode ? Verdict::Allow : analyse(slot, result);
  stats_.analyzed.add();
  stats_.analyzed_bytes.add(pool_.descriptor(slot).frame_len);
  if (result.verdict == Verdict::Block) {
    stats_.blocked.add();
  } else {
    stats_.allowed.add();
  }
  dispose(slot, result.verdict);
  return result;
}

Verdict AnalysisWorker::analyse(SlotId slot, ProcessResult& result) {
  const PacketDescriptor& desc = pool_.descriptor(slot);
  if (!desc.decode_ok) return Verdict::Allow;

  const std::uint64_t now = clock_.gettime_us();
  const CanonicalKey ck = canonical_key(desc.tuple);
  const auto lookup = flows_.lookup_or_create(ck.key, now);
  Flow* flow = lookup.flow;
  if (lookup.created) {
    result.flow_created = true;
    stats_.flows_created.add();
  }
  if (flow == nullptr) stats_.flowless.add();

  const auto payload = payload_of(pool_, desc);
  std::vector<std::uint8_t> stream;
  if (flow != nullptr) {
    update_flow(*flow, desc, ck.direction, now);
    if (desc.tuple.proto == Proto::Tcp && !payload.empty()) {
      stream = flows_.reassemble(*flow, ck.direction, desc.tcp_seq, payload);
      stats_.stream_bytes.add(stream.size());
    }
  }

  PacketContext ctx{&desc, payload, flow, ck.direction, stream, now};
  result.inspected_bytes = payload.size() + stream.size();
  prefilter(rules_, ctx, scratch_);
  result.candidates = static_cast<std::uint32_t>(scratch_.ids.size());
  stats_.candidates.add(result.candidates);

  Verdict verdict = Verdict::Allow;
  const std::uint64_t alert_time = clock_.gettime_us();
  for (std::uint32_t id : scratch_.ids) {
    const Rule& rule = rules_.rule(id);
    if (!evaluate_rule(rule, ctx)) continue;
    const bool blocks = config_.inline_mode && rule_blocks(rule);
    if (blocks) verdict = Verdict::Block;
    alerts_.emit(Alert{.gid = rule.gid,
                       .sid = rule.sid,
                       .rev = rule.rev,
                       .msg = rule.msg,
                       .classtype = rule.classtype,
                       .now_us = alert_time,
                       .tuple = desc.tuple,
                       .slot = slot,
                       .action_taken = blocks ? AlertAction::Blocked : AlertAction::Alerted});
    ++result.alerts;
  }
  stats_.matches.add(result.alerts);
  stats_.alerts.add(result.alerts);

  if (++since_expiry_ >= config_.expire_every) {
    since_expiry_ = 0;
    flows_.expire_idle(alert_time);
  }
  stats_.footprint_bytes.set(flows_.footprint_bytes());
  return verdict;
}

void AnalysisWorker::dispose(SlotId slot, Verdict verdict) {
  if (config_.inline_mode && verdict == Verdict::Allow && tx_ != nullptr) {
    while (!tx_->try_enqueue(slot)) {
      stats_.tx_retries.add();
      std::this_thread::yield();
    }
    return;
  }
  pool_.release(slot);
}

std::size_t AnalysisWorker::poll(Ring<SlotId>& rx, std::size_t max) {
  burst_.resize(max);
  const std::size_t n = rx.dequeue_burst(std::span<SlotId>(burst_));
  for (std::size_t i = 0; i < n; ++i) process_packet(burst_[i]);
  return n;
}

}  // namespace splitids
