// Alerts and the fast one-line alert format.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <mutex>
#include <string>
#include <vector>

#include "splitids/packet.hpp"

namespace splitids {

enum class AlertAction : std::uint8_t { Alerted, Blocked };

struct Alert {
  std::uint32_t gid = 1;
  std::uint32_t sid = 0;
  std::uint32_t rev = 0;
  std::string msg;
  std::string classtype;
  std::uint64_t now_us = 0;  // trusted-clock time, 0 = engine start
  FiveTuple tuple;
  SlotId slot = 0;
  AlertAction action_taken = AlertAction::Alerted;
};

/// `MM/DD-HH:MM:SS.UUUUUU [**] [gid:sid:rev] msg [**] [Classification: c]
/// {PROTO} src:sport -> dst:dport`, without a trailing newline. Time 0 is
/// 01/01-00:00:00.000000. The classification is omitted when empty and
/// ports are omitted for ICMP and other portless protocols.
std::string format_alert_fast(const Alert& alert);

/// Destination for alerts. emit() may be called from several workers.
class AlertSink {
 public:
  virtual ~AlertSink() = default;
  virtual void emit(const Alert& alert) = 0;
};

class NullAlertSink final : public AlertSink {
 public:
  void emit(const Alert&) override {}
};

class MemoryAlertSink final : public AlertSink {
 public:
  void emit(const Alert& alert) override;
  std::vector<Alert> alerts() const;
  std::size_t size() const;

 private:
  mutable std::mutex mutex_;
  std::vector<Alert> alerts_;
};

/// One fast-format line per alert.
class FastAlertWriter final : public AlertSink {
 public:
  explicit FastAlertWriter(std::ostream& out) : out_(out) {}
  void emit(const Alert& alert) override;
  std::uint64_t lines() const;

 private:
  mutable std::mutex mutex_;
  std::ostream& out_;
  std::uint64_t lines_ = 0;
};

}  // namespace splitids
