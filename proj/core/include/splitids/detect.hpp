// Analysis worker: flow tracking, prefilter, full rule evaluation, verdict.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "splitids/alert.hpp"
#include "splitids/clock.hpp"
#include "splitids/counter.hpp"
#include "splitids/flow.hpp"
#include "splitids/packet.hpp"
#include "splitids/ring.hpp"
#include "splitids/ruleset.hpp"

namespace splitids {

struct PacketContext {
  const PacketDescriptor* desc = nullptr;
  std::span<const std::uint8_t> payload;
  const Flow* flow = nullptr;  // null when the packet is analysed without flow state
  Direction direction = Direction::Forward;  // relative to flow->key
  std::span<const std::uint8_t> stream;      // bytes this packet made contiguous
  std::uint64_t now_us = 0;
};

/// Protocol, addresses, ports and arrow. `<>` accepts either orientation.
bool header_matches(const Rule& rule, const FiveTuple& tuple);

/// Full evaluation of every option. Options are evaluated in order; a
/// relative content or byte_test is anchored at the end of the previous
/// content match, and alternative match positions are backtracked. Rules
/// with only_stream inspect ctx.stream, all others ctx.payload.
bool evaluate_rule(const Rule& rule, const PacketContext& ctx);

/// Reusable per-worker scratch for candidate deduplication.
class PrefilterScratch {
 public:
  bool mark(std::uint32_t id);
  void reset(std::size_t n_rules);
  std::vector<std::uint32_t> ids;

 private:
  std::vector<std::uint32_t> stamp_;
  std::uint32_t epoch_ = 0;
};

/// Phase 1: ids of rules whose fast pattern occurs in the payload or the
/// stream bytes, plus contentless rules, restricted to rules whose header
/// matches. Ids are returned ascending in scratch.ids.
void prefilter(const CompiledRuleSet& rules, const PacketContext& ctx, PrefilterScratch& scratch);

/// Reference for prefilter(): every rule evaluated directly.
std::vector<std::uint32_t> evaluate_all(const CompiledRuleSet& rules, const PacketContext& ctx);

enum class Verdict : std::uint8_t { Allow, Block };

struct WorkerConfig {
  bool inline_mode = false;
  /// Fetch and allow without any analysis.
  bool useless_mode = false;
  FlowTableConfig flows;
  /// Flow expiry runs once per this many packets.
  std::uint32_t expire_every = 4096;
};

struct WorkerStats {
  RelaxedCounter analyzed;
  RelaxedCounter analyzed_bytes;
  RelaxedCounter allowed;
  RelaxedCounter blocked;
  RelaxedCounter alerts;
  RelaxedCounter candidates;
  RelaxedCounter matches;
  RelaxedCounter flows_created;
  RelaxedCounter flowless;  // flow table full
  RelaxedCounter stream_bytes;
  RelaxedCounter tx_retries;
  RelaxedCounter footprint_bytes;  // gauge: flow table footprint
};

struct ProcessResult {
  Verdict verdict = Verdict::Allow;
  std::uint32_t candidates = 0;
  std::uint32_t alerts = 0;
  bool flow_created = false;
  std::size_t inspected_bytes = 0;
};

/// Owns one flow table and consumes one RX ring. Not thread-safe; the TX
/// ring and the alert sink are the only shared objects it writes.
class AnalysisWorker {
 public:
  AnalysisWorker(const CompiledRuleSet& rules, PacketPool& pool, const ClockSource& clock,
                 AlertSink& alerts, Ring<SlotId>* tx, WorkerConfig config = {});

  /// Analyses the packet in `slot`, then either hands the slot to the TX
  /// ring (inline mode, allowed) or releases it.
  ProcessResult process_packet(SlotId slot);

  /// Dequeues up to `max` slots from `rx` and processes them.
  std::size_t poll(Ring<SlotId>& rx, std::size_t max = 32);

  const WorkerStats& stats() const { return stats_; }
  const FlowTable& flows() const { return flows_; }
  const WorkerConfig& config() const { return config_; }

 private:
  Verdict analyse(SlotId slot, ProcessResult& result);
  void dispose(SlotId slot, Verdict verdict);

  const CompiledRuleSet& rules_;
  PacketPool& pool_;
  const ClockSource& clock_;
  AlertSink& alerts_;
  Ring<SlotId>* tx_;
  WorkerConfig config_;
  FlowTable flows_;
  PrefilterScratch scratch_;
  WorkerStats stats_;
  std::uint64_t since_expiry_ = 0;
  std::vector<SlotId> burst_;
};

}  // namespace splitids
