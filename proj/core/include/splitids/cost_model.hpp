// Software model of protected-memory overheads.
//
// This is a parameterised model, not a latency claim: it stretches analysis
// time once the engine's protected working set exceeds the usable
// protected-memory budget, and throttles the engine for a warmup window while
// its initial code and data are paged in.

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

namespace splitids {

inline constexpr std::size_t kMiB = std::size_t{1} << 20;

struct CostModel {
  bool enabled = false;
  /// Usable protected memory for user data.
  std::size_t epc_bytes = 96 * kMiB;
  /// Per lifecycle transition. The runtime ring path never crosses.
  double crossing_cost_us = 0.0;
  /// Slowdown per epc_bytes of overflow.
  double paging_penalty = 2.0;
  /// Code and data paged in at startup, and the rate it is paged in at.
  std::size_t warmup_bytes = 64 * kMiB;
  double warmup_rate = static_cast<double>(64 * kMiB) / 6.0;  // bytes per second
  /// How much slower analysis runs while warmup paging is in progress.
  double warmup_slowdown = 1000.0;
  /// Resident engine state besides flows and rules.
  std::size_t base_footprint_bytes = 16 * kMiB;

  double warmup_seconds() const;
  void set_warmup_seconds(double seconds);

  /// Throws std::invalid_argument on a negative or non-finite coefficient.
  void validate() const;
};

/// 1.0 when disabled or within budget, otherwise
/// 1 + paging_penalty * (footprint - epc) / epc.
double paging_factor(const CostModel& model, std::size_t trusted_footprint_bytes);

/// Analysis slowdown at `elapsed_s` seconds after acquisition started.
double warmup_factor(const CostModel& model, double elapsed_s);

/// Rules are charged linearly at 28 MiB for 3,462 rules.
std::size_t ruleset_footprint_bytes(std::size_t n_rules);

std::size_t trusted_footprint_bytes(const CostModel& model, std::size_t flow_bytes,
                                    std::size_t n_rules);

/// Applies one `key=value` setting. Recognised keys: enabled, epc_mib,
/// paging_penalty, warmup_seconds, warmup_slowdown, crossing_cost_us,
/// base_mib; a leading "cost_model." is accepted. Throws
/// std::invalid_argument for unknown keys or bad values.
void apply_cost_model_setting(CostModel& model, std::string_view key, std::string_view value);

std::string describe(const CostModel& model);

}  // namespace splitids
