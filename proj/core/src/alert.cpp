#include "splitids/alert.hpp"

#include <chrono>
#include <cstdio>
#include <ostream>

namespace splitids {

std::string format_alert_fast(const Alert& alert) {
  using namespace std::chrono;
  const microseconds t{alert.now_us};
  const auto day = floor<days>(t);
  const year_month_day ymd{sys_days{day}};
  const hh_mm_ss hms{duration_cast<microseconds>(t - day)};

  char stamp[32];
  std::snprintf(stamp, sizeof stamp, "%02u/%02u-%02d:%02d:%02d.%06lld",
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()),
                static_cast<long long>(hms.subseconds().count()));

  std::string line = stamp;
  line += " [**] [" + std::to_string(alert.gid) + ":" + std::to_string(alert.sid) + ":" +
          std::to_string(alert.rev) + "] " + alert.msg + " [**] ";
  if (!alert.classtype.empty()) line += "[Classification: " + alert.classtype + "] ";
  line += "{";
  line += to_string(alert.tuple.proto);
  line += "} ";
  const bool ports = alert.tuple.proto == Proto::Tcp || alert.tuple.proto == Proto::Udp;
  line += alert.tuple.src_ip.to_string();
  if (ports) line += ":" + std::to_string(alert.tuple.src_port);
  line += " -> " + alert.tuple.dst_ip.to_string();
  if (ports) line += ":" + std::to_string(alert.tuple.dst_port);
  return line;
}

void MemoryAlertSink::emit(const Alert& alert) {
  std::lock_guard lock(mutex_);
  alerts_.push_back(alert);
}

std::vector<Alert> MemoryAlertSink::alerts() const {
  std::lock_guard lock(mutex_);
  return alerts_;
}

std::size_t MemoryAlertSink::size() const {
  std::lock_guard lock(mutex_);
  return alerts_.size();
}

void FastAlertWriter::emit(const Alert& alert) {
  const std::string line = format_alert_fast(alert);
  std::lock_guard lock(mutex_);
  out_ << line << '\n';
  ++lines_;
}

std::uint64_t FastAlertWriter::lines() const {
  std::lock_guard lock(mutex_);
  return lines_;
}

}  // namespace splitids
