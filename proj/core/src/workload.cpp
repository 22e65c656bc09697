#include "splitids/workload.hpp"

#include <cmath>

#include "splitids/pcap.hpp"

namespace splitids {

namespace {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

void put16(Frame& f, std::size_t at, std::uint16_t v) {
  f[at] = static_cast<std::uint8_t>(v >> 8);
  f[at + 1] = static_cast<std::uint8_t>(v);
}

void put32(Frame& f, std::size_t at, std::uint32_t v) {
  put16(f, at, static_cast<std::uint16_t>(v >> 16));
  put16(f, at + 2, static_cast<std::uint16_t>(v));
}

std::uint16_t ipv4_checksum(const std::uint8_t* header, std::size_t len) {
  std::uint32_t sum = 0;
  for (std::size_t i = 0; i < len; i += 2) sum += (std::uint32_t{header[i]} << 8) | header[i + 1];
  while (sum >> 16) sum = (sum & 0xffff) + (sum >> 16);
  return static_cast<std::uint16_t>(~sum);
}

}  // namespace

Frame build_frame(const FrameSpec& spec) {
  const FiveTuple& t = spec.tuple;
  std::size_t l4_len = 0;
  std::uint8_t ip_proto = 253;
  switch (t.proto) {
    case Proto::Tcp: l4_len = 20; ip_proto = 6; break;
    case Proto::Udp: l4_len = 8; ip_proto = 17; break;
    case Proto::Icmp: l4_len = 8; ip_proto = 1; break;
    case Proto::Other: break;
  }
  const std::size_t ip_total = 20 + l4_len + spec.payload.size();
  Frame f(std::max(14 + ip_total, spec.pad_to), 0);

  // Ethernet: locally administered MACs.
  const std::uint8_t dst_mac[6] = {0x02, 0, 0, 0, 0, 0x02};
  const std::uint8_t src_mac[6] = {0x02, 0, 0, 0, 0, 0x01};
  std::copy(dst_mac, dst_mac + 6, f.begin());
  std::copy(src_mac, src_mac + 6, f.begin() + 6);
  put16(f, 12, 0x0800);

  const std::size_t ip = 14;
  f[ip] = 0x45;
  put16(f, ip + 2, static_cast<std::uint16_t>(ip_total));
  put16(f, ip + 6, 0x4000);  // DF
  f[ip + 8] = 64;
  f[ip + 9] = ip_proto;
  put32(f, ip + 12, t.src_ip.value);
  put32(f, ip + 16, t.dst_ip.value);
  put16(f, ip + 10, ipv4_checksum(f.data() + ip, 20));

  const std::size_t l4 = ip + 20;
  switch (t.proto) {
    case Proto::Tcp:
      put16(f, l4, t.src_port);
      put16(f, l4 + 2, t.dst_port);
      put32(f, l4 + 4, spec.seq);
      put32(f, l4 + 8, spec.ack);
      f[l4 + 12] = 5 << 4;
      f[l4 + 13] = spec.tcp_flags;
      put16(f, l4 + 14, 65535);
      break;
    case Proto::Udp:
      put16(f, l4, t.src_port);
      put16(f, l4 + 2, t.dst_port);
      put16(f, l4 + 4, static_cast<std::uint16_t>(8 + spec.payload.size()));
      break;
    case Proto::Icmp:
      f[l4] = 8;  // echo request
      break;
    case Proto::Other:
      break;
  }
  std::copy(spec.payload.begin(), spec.payload.end(), f.begin() + static_cast<std::ptrdiff_t>(l4 + l4_len));
  return f;
}

std::vector<std::uint8_t> heartbeat_payload(std::uint16_t length_field) {
  return {0x18, 0x03, 0x00, static_cast<std::uint8_t>(length_field >> 8),
          static_cast<std::uint8_t>(length_field)};
}

FrameList tcp_session(const FiveTuple& c2s, std::span<const std::uint8_t> server_payload) {
  constexpr std::uint32_t kClientIsn = 1000;
  constexpr std::uint32_t kServerIsn = 5000;
  using namespace tcp_flags;
  const FiveTuple s2c = c2s.reversed();
  FrameList frames;
  frames.push_back(build_frame({.tuple = c2s, .tcp_flags = kSyn, .seq = kClientIsn}));
  frames.push_back(build_frame(
      {.tuple = s2c, .tcp_flags = kSyn | kAck, .seq = kServerIsn, .ack = kClientIsn + 1}));
  frames.push_back(
      build_frame({.tuple = c2s, .tcp_flags = kAck, .seq = kClientIsn + 1, .ack = kServerIsn + 1}));
  frames.push_back(build_frame({.tuple = s2c,
                                .tcp_flags = kAck | kPsh,
                                .seq = kServerIsn + 1,
                                .ack = kClientIsn + 1,
                                .payload = server_payload}));
  return frames;
}

void WorkloadSpec::validate() const {
  switch (kind) {
    case Kind::Synth:
      if (packet_size < kMinSynthFrame || packet_size > kMaxSynthFrame) {
        throw ConfigError("synthetic packet size must be within [64, 1518], got " +
                          std::to_string(packet_size));
      }
      if (n_flows == 0) throw ConfigError("n_flows must be at least 1");
      if (n_flows >= (std::size_t{1} << 24) - 1) throw ConfigError("n_flows is too large");
      if (server_ports.empty()) throw ConfigError("server_ports must not be empty");
      break;
    case Kind::Pcap:
      if (pcap_path.empty()) throw ConfigError("pcap workload needs a path");
      break;
    case Kind::Memory:
      if (!frames) throw ConfigError("memory workload needs frames");
      break;
  }
  if (repeat && packet_count == 0) throw ConfigError("repeat needs a packet count");
  if (attack) {
    if (kind != Kind::Synth) throw ConfigError("attack injection needs a synthetic workload");
    if (!(attack->rate >= 0.0 && attack->rate <= 1.0)) {
      throw ConfigError("attack rate must be within [0, 1]");
    }
    if (attack->payload.empty()) throw ConfigError("attack payload must not be empty");
    if (attack->payload.size() > packet_size - kTcpFrameOverhead) {
      throw ConfigError("attack payload does not fit the packet size");
    }
  }
}

SynthGenerator::SynthGenerator(WorkloadSpec spec) : spec_(std::move(spec)) {
  spec_.kind = WorkloadSpec::Kind::Synth;
  spec_.validate();
  payload_len_ = spec_.packet_size - kTcpFrameOverhead;
  eligible_ = eligible_before(spec_.packet_count);
  if (spec_.attack && spec_.attack->rate > 0.0) {
    attacks_ = static_cast<std::uint64_t>(
        std::ceil(spec_.attack->rate * static_cast<double>(spec_.packet_count) - 1e-9));
    if (attacks_ > eligible_) {
      throw ConfigError("attack rate needs " + std::to_string(attacks_) +
                        " server-to-client data packets, workload has " +
                        std::to_string(eligible_));
    }
  }
}

std::uint64_t SynthGenerator::eligible_before(std::uint64_t k) const {
  const std::uint64_t flows = spec_.n_flows;
  const std::uint64_t round = k / flows;
  const std::uint64_t f = k % flows;
  if (round < 4) return 0;
  return flows * ((round - 3) / 2) + (round % 2 == 0 ? f : 0);
}

bool SynthGenerator::is_attack(std::uint64_t k) const {
  if (attacks_ == 0 || k >= spec_.packet_count) return false;
  const std::uint64_t round = k / spec_.n_flows;
  if (round < 4 || round % 2 != 0) return false;
  // Bresenham spread of attacks_ hits over eligible_ slots.
  const std::uint64_t e = eligible_before(k);
  return ((e + 1) * attacks_) / eligible_ > (e * attacks_) / eligible_;
}

std::uint32_t SynthGenerator::isn(std::size_t flow, bool server) const {
  return static_cast<std::uint32_t>(mix64(spec_.seed * 0x100000001b3ull + flow * 2 + server));
}

FiveTuple SynthGenerator::flow_tuple(std::size_t f) const {
  const auto client = static_cast<std::uint32_t>(0x0a000000u + f + 1);  // 10.0.0.0/8
  const auto server = static_cast<std::uint32_t>(0xc0a80001u + (f % 16));  // 192.168.0.1+
  return FiveTuple{Proto::Tcp, Ipv4Address{client}, Ipv4Address{server},
                   static_cast<std::uint16_t>(1024 + f % 60000),
                   spec_.server_ports[f % spec_.server_ports.size()]};
}

FiveTuple SynthGenerator::tuple(std::uint64_t k) const {
  const std::size_t f = k % spec_.n_flows;
  const std::uint64_t round = k / spec_.n_flows;
  const FiveTuple c2s = flow_tuple(f);
  const bool from_server = round == 1 || (round >= 3 && (round - 3) % 2 == 1);
  return from_server ? c2s.reversed() : c2s;
}

Frame SynthGenerator::frame(std::uint64_t k) const {
  Frame out;
  frame_into(k, out);
  return out;
}

void SynthGenerator::frame_into(std::uint64_t k, Frame& out) const {
  using namespace tcp_flags;
  const std::size_t f = k % spec_.n_flows;
  const std::uint64_t round = k / spec_.n_flows;
  const std::uint32_t ci = isn(f, false);
  const std::uint32_t si = isn(f, true);

  FrameSpec fs{.tuple = tuple(k), .pad_to = spec_.packet_size};
  std::vector<std::uint8_t> payload;
  if (round == 0) {
    fs.tcp_flags = kSyn;
    fs.seq = ci;
  } else if (round == 1) {
    fs.tcp_flags = kSyn | kAck;
    fs.seq = si;
    fs.ack = ci + 1;
  } else if (round == 2) {
    fs.tcp_flags = kAck;
    fs.seq = ci + 1;
    fs.ack = si + 1;
  } else {
    const std::uint64_t j = round - 3;
    const bool from_server = j % 2 == 1;
    const auto plen = static_cast<std::uint32_t>(payload_len_);
    const auto own = static_cast<std::uint32_t>(j / 2);
    const auto other = static_cast<std::uint32_t>(from_server ? (j + 1) / 2 : j / 2);
    fs.tcp_flags = kAck | kPsh;
    fs.seq = (from_server ? si : ci) + 1 + own * plen;
    fs.ack = (from_server ? ci : si) + 1 + other * plen;

    payload.resize(payload_len_);
    std::uint64_t state = mix64(spec_.seed ^ mix64(k));
    for (std::size_t i = 0; i < payload.size(); i += 8) {
      state = mix64(state);
      for (std::size_t b = 0; b < 8 && i + b < payload.size(); ++b) {
        payload[i + b] = static_cast<std::uint8_t>(state >> (8 * b));
      }
    }
    if (spec_.attack) {
      const auto& attack = spec_.attack->payload;
      if (is_attack(k)) {
        std::copy(attack.begin(), attack.end(), payload.begin());
      } else if (std::equal(attack.begin(), attack.begin() + std::min<std::size_t>(3, attack.size()),
                            payload.begin())) {
        payload[0] ^= 0xff;  // accidental attack prefix
      }
    }
    fs.payload = payload;
  }
  out = build_frame(fs);
}

SynthSource::SynthSource(std::shared_ptr<const SynthGenerator> gen, std::uint64_t start,
                         std::uint64_t stride)
    : gen_(std::move(gen)), k_(start), stride_(stride) {}

bool SynthSource::next(FrameView& out) {
  if (k_ >= gen_->count()) return false;
  gen_->frame_into(k_, buffer_);
  out.bytes = buffer_;
  out.timestamp_us = 0;
  k_ += stride_;
  return true;
}

MemorySource::MemorySource(std::shared_ptr<const FrameList> frames, std::uint64_t start,
                           std::uint64_t stride, bool repeat, std::uint64_t limit)
    : frames_(std::move(frames)), k_(start), stride_(stride) {
  const std::uint64_t n = frames_->size();
  end_ = limit == 0 ? n : (repeat ? limit : std::min(limit, n));
  if (n == 0) end_ = 0;
}

bool MemorySource::next(FrameView& out) {
  if (k_ >= end_) return false;
  out.bytes = (*frames_)[k_ % frames_->size()];
  out.timestamp_us = 0;
  k_ += stride_;
  return true;
}

namespace {

std::shared_ptr<const FrameList> load_frames(const WorkloadSpec& spec) {
  if (spec.kind == WorkloadSpec::Kind::Memory) return spec.frames;
  auto frames = std::make_shared<FrameList>();
  for (auto& rec : pcap_read(spec.pcap_path).records) frames->push_back(std::move(rec.data));
  return frames;
}

}  // namespace

std::vector<std::unique_ptr<PacketSource>> make_sources(const WorkloadSpec& spec, std::size_t n) {
  spec.validate();
  if (n == 0) throw ConfigError("at least one source is required");
  std::vector<std::unique_ptr<PacketSource>> out;
  if (spec.kind == WorkloadSpec::Kind::Synth) {
    auto gen = std::make_shared<const SynthGenerator>(spec);
    for (std::size_t i = 0; i < n; ++i) out.push_back(std::make_unique<SynthSource>(gen, i, n));
  } else {
    auto frames = load_frames(spec);
    for (std::size_t i = 0; i < n; ++i) {
      out.push_back(
          std::make_unique<MemorySource>(frames, i, n, spec.repeat, spec.packet_count));
    }
  }
  return out;
}

std::uint64_t workload_size(const WorkloadSpec& spec) {
  spec.validate();
  if (spec.kind == WorkloadSpec::Kind::Synth) return spec.packet_count;
  const std::uint64_t n = load_frames(spec)->size();
  if (n == 0 || spec.packet_count == 0) return n;
  return spec.repeat ? spec.packet_count : std::min(spec.packet_count, n);
}

FrameList materialize(const WorkloadSpec& spec) {
  FrameList out;
  auto sources = make_sources(spec, 1);
  FrameView view;
  while (sources[0]->next(view)) out.emplace_back(view.bytes.begin(), view.bytes.end());
  return out;
}

}  // namespace splitids
