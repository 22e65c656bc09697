#include "splitids/pcap.hpp"

#include <iterator>

namespace splitids {

namespace {

constexpr std::uint32_t kMaxRecordBytes = 256 * 1024;

constexpr std::uint32_t bswap32(std::uint32_t v) {
  return (v >> 24) | ((v >> 8) & 0xff00u) | ((v << 8) & 0xff0000u) | (v << 24);
}

struct Reader {
  std::span<const std::uint8_t> bytes;
  bool swapped = false;

  std::uint32_t u32(std::size_t at) const {
    std::uint32_t v = std::uint32_t{bytes[at]} | (std::uint32_t{bytes[at + 1]} << 8) |
                      (std::uint32_t{bytes[at + 2]} << 16) | (std::uint32_t{bytes[at + 3]} << 24);
    return swapped ? bswap32(v) : v;
  }
};

void put_u32(std::ofstream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v), static_cast<char>(v >> 8), static_cast<char>(v >> 16),
                     static_cast<char>(v >> 24)};
  out.write(b, 4);
}

void put_u16(std::ofstream& out, std::uint16_t v) {
  const char b[2] = {static_cast<char>(v), static_cast<char>(v >> 8)};
  out.write(b, 2);
}

}  // namespace

PcapFile pcap_parse(std::span<const std::uint8_t> bytes) {
  using K = PcapError::Kind;
  if (bytes.size() < 4) throw PcapError(K::BadMagic, "file too short for a pcap magic number");
  Reader r{bytes, false};
  PcapFile file;
  const std::uint32_t magic = r.u32(0);
  if (magic == kPcapMagicUs || magic == kPcapMagicNs) {
    file.nanosecond = magic == kPcapMagicNs;
  } else if (bswap32(magic) == kPcapMagicUs || bswap32(magic) == kPcapMagicNs) {
    r.swapped = file.swapped = true;
    file.nanosecond = bswap32(magic) == kPcapMagicNs;
  } else {
    throw PcapError(K::BadMagic, "not a pcap file (bad magic number)");
  }
  if (bytes.size() < 24) throw PcapError(K::TruncatedRecord, "truncated pcap global header");
  file.snaplen = r.u32(16);
  file.linktype = r.u32(20);
  if (file.linktype != kLinkTypeEthernet) {
    throw PcapError(K::UnsupportedLinkType,
                    "unsupported pcap link type " + std::to_string(file.linktype));
  }

  std::size_t at = 24;
  while (at < bytes.size()) {
    if (bytes.size() - at < 16) throw PcapError(K::TruncatedRecord, "truncated record header");
    const std::uint64_t sec = r.u32(at);
    const std::uint64_t frac = r.u32(at + 4);
    const std::uint32_t incl = r.u32(at + 8);
    const std::uint32_t orig = r.u32(at + 12);
    at += 16;
    if (incl > kMaxRecordBytes) throw PcapError(K::TruncatedRecord, "implausible record length");
    if (bytes.size() - at < incl) throw PcapError(K::TruncatedRecord, "truncated record body");
    PcapRecord rec;
    rec.timestamp_us = sec * 1'000'000 + (file.nanosecond ? frac / 1000 : frac);
    rec.orig_len = orig;
    rec.data.assign(bytes.begin() + static_cast<std::ptrdiff_t>(at),
                    bytes.begin() + static_cast<std::ptrdiff_t>(at + incl));
    file.records.push_back(std::move(rec));
    at += incl;
  }
  return file;
}

PcapFile pcap_read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PcapError(PcapError::Kind::Io, "cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw PcapError(PcapError::Kind::Io, "read error on " + path);
  return pcap_parse(bytes);
}

PcapWriter::PcapWriter(const std::string& path, std::uint32_t snaplen)
    : out_(path, std::ios::binary | std::ios::trunc), snaplen_(snaplen) {
  if (!out_) throw PcapError(PcapError::Kind::Io, "cannot create " + path);
  put_u32(out_, kPcapMagicUs);
  put_u16(out_, 2);
  put_u16(out_, 4);
  put_u32(out_, 0);  // thiszone
  put_u32(out_, 0);  // sigfigs
  put_u32(out_, snaplen_);
  put_u32(out_, kLinkTypeEthernet);
}

void PcapWriter::write(std::span<const std::uint8_t> frame, std::uint64_t timestamp_us) {
  const auto incl = static_cast<std::uint32_t>(std::min<std::size_t>(frame.size(), snaplen_));
  put_u32(out_, static_cast<std::uint32_t>(timestamp_us / 1'000'000));
  put_u32(out_, static_cast<std::uint32_t>(timestamp_us % 1'000'000));
  put_u32(out_, incl);
  put_u32(out_, static_cast<std::uint32_t>(frame.size()));
  out_.write(reinterpret_cast<const char*>(frame.data()), incl);
  if (!out_) throw PcapError(PcapError::Kind::Io, "write error");
  ++records_;
}

void PcapWriter::close() {
  out_.flush();
  if (!out_) throw PcapError(PcapError::Kind::Io, "write error");
  out_.close();
}

void pcap_write(const std::string& path, const std::vector<std::vector<std::uint8_t>>& frames,
                std::uint64_t spacing_us) {
  PcapWriter writer(path);
  std::uint64_t t = 0;
  for (const auto& f : frames) {
    writer.write(f, t);
    t += spacing_us;
  }
  writer.close();
}

}  // namespace splitids
