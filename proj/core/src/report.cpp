#include <iomanip>
#include <ostream>

#include "splitids/experiment.hpp"

namespace splitids {

void write_report_csv(const Report& report, std::ostream& out) {
  const auto flags = out.flags();
  out << kReportCsvHeader << '\n' << std::fixed;
  for (const auto& iv : report.intervals) {
    out << "interval," << std::setprecision(3) << iv.start_s << ',' << iv.end_s << ','
        << iv.received << ',' << iv.analyzed << ',' << iv.dropped << ',' << std::setprecision(4)
        << iv.drop_rate_pct << ',' << iv.paging_activity_pct << ",,,,,\n";
  }
  const auto& t = report.totals;
  const double drop_pct =
      t.received ? 100.0 * static_cast<double>(t.dropped) / static_cast<double>(t.received) : 0.0;
  out << "total," << std::setprecision(3) << 0.0 << ',' << report.duration_s << ',' << t.received
      << ',' << t.analyzed << ',' << t.dropped << ',' << std::setprecision(4) << drop_pct << ",,"
      << t.allowed << ',' << t.blocked << ',' << t.alerts << ',' << std::setprecision(1)
      << report.throughput_pps << ',' << report.throughput_bps << '\n';
  out.flags(flags);
}

void write_report_text(const Report& report, std::ostream& out) {
  const auto flags = out.flags();
  const auto& t = report.totals;
  out << "configuration\n";
  for (const auto& [k, v] : report.config) out << "  " << k << ": " << v << '\n';
  out << "rules: " << report.rules_loaded << " loaded, " << report.rule_errors
      << " rejected, " << report.opaque_options << " opaque options\n";
  out << "packets\n"
      << "  received:  " << t.received << '\n'
      << "  analyzed:  " << t.analyzed << '\n'
      << "  allowed:   " << t.allowed << '\n'
      << "  blocked:   " << t.blocked << '\n'
      << "  dropped:   " << t.dropped << " (ring full " << t.ring_full << ", pool exhausted "
      << t.pool_exhausted << ", decode failed " << t.decode_failed << ", non-IPv4 "
      << t.unsupported_l3 << ")\n"
      << "  alerts:    " << t.alerts << '\n'
      << "  flows:     " << t.flows_created << " created, " << t.flowless << " without state\n";
  out << std::fixed << std::setprecision(3) << "duration: " << report.duration_s << " s\n"
      << std::setprecision(1) << "throughput: " << report.throughput_pps << " pps, "
      << report.throughput_bps / 1e6 << " Mbit/s, mean frame " << report.mean_frame_bytes
      << " B\n";
  out << "footprint: " << std::setprecision(1)
      << static_cast<double>(report.peak_footprint_bytes) / (1024.0 * 1024.0)
      << " MiB peak, paging factor " << std::setprecision(3) << report.max_paging_factor << '\n';
  out << "intervals (start s, end s, received, dropped, drop %, paging %)\n";
  for (const auto& iv : report.intervals) {
    out << "  " << std::setprecision(2) << std::setw(8) << iv.start_s << " -" << std::setw(8)
        << iv.end_s << std::setw(12) << iv.received << std::setw(12)
        << iv.dropped << std::setprecision(2) << std::setw(9) << iv.drop_rate_pct << std::setw(9)
        << iv.paging_activity_pct << '\n';
  }
  out << "conservation: " << (report.conserved() ? "ok" : "VIOLATED") << ", leaked slots "
      << report.leaked_slots << '\n';
  out.flags(flags);
}

}  // namespace splitids
