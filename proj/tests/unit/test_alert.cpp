#include <gtest/gtest.h>

#include <sstream>

#include "splitids/alert.hpp"

namespace splitids {
namespace {

Alert sample() {
  Alert a;
  a.sid = 30514;
  a.rev = 9;
  a.msg = "OpenSSL SSLv3 large heartbeat response - possible ssl heartbleed attempt";
  a.classtype = "attempted-recon";
  a.tuple = {Proto::Tcp, Ipv4Address::from_octets(10, 0, 0, 2),
             Ipv4Address::from_octets(10, 0, 0, 1), 443, 5555};
  return a;
}

TEST(FastAlert, TimeZeroAndFullLine) {
  EXPECT_EQ(format_alert_fast(sample()),
            "01/01-00:00:00.000000 [**] [1:30514:9] OpenSSL SSLv3 large heartbeat response - "
            "possible ssl heartbleed attempt [**] [Classification: attempted-recon] {TCP} "
            "10.0.0.2:443 -> 10.0.0.1:5555");
}

TEST(FastAlert, TimestampRollsOverDaysAndMonths) {
  Alert a = sample();
  a.now_us = ((31ull * 24 + 1) * 3600 + 62) * 1'000'000 + 7;  // Feb 1st, 01:01:02
  EXPECT_EQ(format_alert_fast(a).substr(0, 21), "02/01-01:01:02.000007");
}

TEST(FastAlert, PortlessProtocolsAndEmptyClassification) {
  Alert a = sample();
  a.classtype.clear();
  a.tuple = {Proto::Icmp, Ipv4Address::from_octets(1, 2, 3, 4),
             Ipv4Address::from_octets(5, 6, 7, 8), 0, 0};
  a.gid = 3;
  EXPECT_EQ(format_alert_fast(a),
            "01/01-00:00:00.000000 [**] [3:30514:9] " + a.msg + " [**] {ICMP} 1.2.3.4 -> 5.6.7.8");
}

TEST(AlertSinks, WriterEmitsOneLinePerAlert) {
  std::ostringstream out;
  FastAlertWriter writer(out);
  writer.emit(sample());
  writer.emit(sample());
  EXPECT_EQ(writer.lines(), 2u);
  const std::string text = out.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 2);
  MemoryAlertSink mem;
  mem.emit(sample());
  EXPECT_EQ(mem.size(), 1u);
  EXPECT_EQ(mem.alerts()[0].sid, 30514u);
}

}  // namespace
}  // namespace splitids
