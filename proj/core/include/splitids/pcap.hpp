// Classic libpcap container: 24-byte global header, 16-byte record headers.
// Reads either byte order and microsecond or nanosecond timestamps; writes
// little-endian microsecond files. Ethernet link type only.

#pragma once

#include <cstdint>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "splitids/acquire.hpp"

namespace splitids {

class PcapError : public std::runtime_error {
 public:
  enum class Kind { BadMagic, TruncatedRecord, Io, UnsupportedLinkType };
  PcapError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

inline constexpr std::uint32_t kPcapMagicUs = 0xa1b2c3d4;
inline constexpr std::uint32_t kPcapMagicNs = 0xa1b23c4d;
inline constexpr std::uint32_t kLinkTypeEthernet = 1;

struct PcapRecord {
  std::uint64_t timestamp_us = 0;
  std::uint32_t orig_len = 0;
  std::vector<std::uint8_t> data;
};

struct PcapFile {
  std::uint32_t snaplen = 65535;
  std::uint32_t linktype = kLinkTypeEthernet;
  bool swapped = false;
  bool nanosecond = false;
  std::vector<PcapRecord> records;
};

PcapFile pcap_parse(std::span<const std::uint8_t> bytes);
PcapFile pcap_read(const std::string& path);

class PcapWriter {
 public:
  explicit PcapWriter(const std::string& path, std::uint32_t snaplen = 65535);
  void write(std::span<const std::uint8_t> frame, std::uint64_t timestamp_us);
  void close();
  std::uint64_t records() const { return records_; }

 private:
  std::ofstream out_;
  std::uint32_t snaplen_;
  std::uint64_t records_ = 0;
};

/// Writes every frame with timestamps 0, 1, 2, ... microseconds apart by
/// `spacing_us`.
void pcap_write(const std::string& path, const std::vector<std::vector<std::uint8_t>>& frames,
                std::uint64_t spacing_us = 1);

/// PacketSink that appends frames to a pcap file with increasing timestamps.
/// Single writer only.
class PcapSink final : public PacketSink {
 public:
  explicit PcapSink(const std::string& path) : writer_(path) {}
  void write(std::span<const std::uint8_t> frame) override { writer_.write(frame, next_us_++); }
  void close() { writer_.close(); }

 private:
  PcapWriter writer_;
  std::uint64_t next_us_ = 0;
};

}  // namespace splitids
