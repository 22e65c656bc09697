// Experiment runner: drives the lifecycle, feeds a workload through the
// acquisition and analysis pipeline, and reports totals plus a per-interval
// series.
//
// Simulated mode is a deterministic discrete-event run on one thread: the
// real pipeline code processes every packet, while time comes from a
// simulated clock advanced by a per-packet service-time model. Real mode
// runs acquisition threads, analysis threads and the counter clock.

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "splitids/acquire.hpp"
#include "splitids/alert.hpp"
#include "splitids/clock.hpp"
#include "splitids/cost_model.hpp"
#include "splitids/flow.hpp"
#include "splitids/rules.hpp"
#include "splitids/workload.hpp"

namespace splitids {

/// Service time of one packet in simulated mode, before the cost-model
/// factors are applied.
struct SimCosts {
  double base_ns = 200.0;
  double per_byte_ns = 0.25;
  double per_candidate_ns = 60.0;
  double per_alert_ns = 400.0;
  double flow_create_ns = 50.0;
  double useless_ns = 40.0;  // replaces everything else in useless mode
};

enum class RunMode : std::uint8_t { Simulated, Real };

struct EngineConfig {
  std::size_t n_workers = 1;
  std::size_t n_acquire_threads = 1;
  std::size_t burst_size = 32;
  std::size_t ring_capacity = 4096;
  std::size_t pool_capacity = 0;  // 0: derived from the ring sizes
  bool inline_mode = false;
  bool useless_mode = false;
  std::string rules_path;
  std::optional<std::size_t> take_first;
  /// Used instead of rules_path when set.
  std::shared_ptr<const RuleSet> rules;
  Variables vars;
  CostModel cost;
  FlowTableConfig flows;
  double cpufreq = kDefaultCpuFreq;
};

struct RunConfig {
  RunMode mode = RunMode::Simulated;
  /// Simulated offered load. Each frame occupies (len + 20) * 8 bits of
  /// line time; rate_pps, when positive, replaces the line rate.
  double line_rate_bps = 10e9;
  double rate_pps = 0.0;
  /// Stop after this many (simulated or wall) seconds; 0 runs until the
  /// workload is exhausted.
  double duration_s = 0.0;
  double interval_s = 3.0;
  SimCosts costs;
};

struct ExperimentConfig {
  WorkloadSpec workload;
  EngineConfig engine;
  RunConfig run;
  AlertSink* alerts = nullptr;   // null discards alerts
  PacketSink* tx_sink = nullptr;  // inline mode; null discards
};

struct IntervalRecord {
  double start_s = 0.0;
  double end_s = 0.0;
  std::uint64_t received = 0;  // by arrival time
  std::uint64_t analyzed = 0;  // by completion time
  std::uint64_t dropped = 0;   // by arrival time
  double drop_rate_pct = 0.0;
  /// Share of analysis busy time spent in cost-model stretching.
  double paging_activity_pct = 0.0;
};

struct ReportTotals {
  std::uint64_t received = 0;
  std::uint64_t analyzed = 0;
  std::uint64_t allowed = 0;
  std::uint64_t blocked = 0;
  /// Everything received but not analysed: ring_full + pool_exhausted +
  /// decode_failed + unsupported_l3.
  std::uint64_t dropped = 0;
  std::uint64_t ring_full = 0;
  std::uint64_t pool_exhausted = 0;
  std::uint64_t decode_failed = 0;
  std::uint64_t unsupported_l3 = 0;
  std::uint64_t alerts = 0;
  std::uint64_t tx_sent = 0;
  std::uint64_t flows_created = 0;
  std::uint64_t flowless = 0;
  std::uint64_t candidates = 0;
  std::uint64_t received_bytes = 0;
  std::uint64_t analyzed_bytes = 0;
};

struct Report {
  RunMode mode = RunMode::Simulated;
  ReportTotals totals;
  double duration_s = 0.0;
  double throughput_pps = 0.0;  // analyzed / duration
  double throughput_bps = 0.0;  // analyzed frame bits / duration
  double mean_frame_bytes = 0.0;
  std::vector<IntervalRecord> intervals;
  std::size_t rules_loaded = 0;
  std::size_t rule_errors = 0;
  std::size_t opaque_options = 0;
  std::size_t peak_footprint_bytes = 0;  // flows + rules + base, cost-model accounting
  double max_paging_factor = 1.0;
  std::size_t leaked_slots = 0;
  std::uint32_t lifecycle_crossings = 0;
  std::vector<std::pair<std::string, std::string>> config;

  /// received == analyzed + dropped and allowed == analyzed - blocked.
  bool conserved() const;
};

/// Throws ConfigError for invalid settings and OrderError if the lifecycle
/// is driven out of order.
Report run_experiment(const ExperimentConfig& config);

/// One `interval` row per interval, then one `total` row.
void write_report_csv(const Report& report, std::ostream& out);
void write_report_text(const Report& report, std::ostream& out);

inline constexpr const char* kReportCsvHeader =
    "kind,start_s,end_s,received,analyzed,dropped,drop_rate_pct,paging_activity_pct,allowed,"
    "blocked,alerts,throughput_pps,throughput_bps";

}  // namespace splitids
