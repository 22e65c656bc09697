#include "splitids/packet.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <limits>
#include <stdexcept>
#include <tuple>

namespace splitids {

namespace {

constexpr std::size_t kEthHeader = 14;
constexpr std::size_t kIpv4MinHeader = 20;
constexpr std::size_t kTcpMinHeader = 20;
constexpr std::size_t kUdpHeader = 8;
constexpr std::size_t kIcmpHeader = 8;
constexpr std::uint16_t kEtherTypeIpv4 = 0x0800;

std::uint16_t load_be16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>((p[0] << 8) | p[1]);
}

std::uint32_t load_be32(const std::uint8_t* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) |
         (std::uint32_t{p[2]} << 8) | std::uint32_t{p[3]};
}

struct Parsed {
  DecodeStatus status = DecodeStatus::Ok;
  PacketDescriptor desc;
};

Parsed parse_headers(std::span<const std::uint8_t> frame) {
  Parsed out;
  auto& d = out.desc;
  d.frame_len = static_cast<std::uint16_t>(frame.size());
  if (frame.size() < kEthHeader) {
    out.status = DecodeStatus::Truncated;
    return out;
  }
  d.l3_offset = kEthHeader;
  if (load_be16(frame.data() + 12) != kEtherTypeIpv4) {
    out.status = DecodeStatus::UnsupportedL3;
    d.l4_offset = d.payload_offset = kEthHeader;
    return out;
  }
  if (frame.size() < kEthHeader + kIpv4MinHeader) {
    out.status = DecodeStatus::Truncated;
    return out;
  }
  const std::uint8_t* ip = frame.data() + kEthHeader;
  if ((ip[0] >> 4) != 4) {
    out.status = DecodeStatus::UnsupportedL3;
    d.l4_offset = d.payload_offset = kEthHeader;
    return out;
  }
  const std::size_t ihl = static_cast<std::size_t>(ip[0] & 0x0f) * 4;
  const std::size_t total_len = load_be16(ip + 2);
  if (ihl < kIpv4MinHeader || total_len < ihl) {
    out.status = DecodeStatus::Malformed;
    return out;
  }
  if (kEthHeader + total_len > frame.size()) {
    out.status = DecodeStatus::Truncated;
    return out;
  }
  const std::size_t ip_end = kEthHeader + total_len;
  const bool later_fragment = (load_be16(ip + 6) & 0x1fff) != 0;

  auto& t = d.tuple;
  t.src_ip = Ipv4Address{load_be32(ip + 12)};
  t.dst_ip = Ipv4Address{load_be32(ip + 16)};
  d.l4_offset = static_cast<std::uint16_t>(kEthHeader + ihl);

  const std::uint8_t* l4 = frame.data() + d.l4_offset;
  const std::size_t l4_avail = ip_end - d.l4_offset;
  std::size_t l4_header = 0;
  switch (later_fragment ? 0 : ip[9]) {
    case 6: {
      if (l4_avail < kTcpMinHeader) {
        out.status = DecodeStatus::Truncated;
        return out;
      }
      l4_header = static_cast<std::size_t>(l4[12] >> 4) * 4;
      if (l4_header < kTcpMinHeader) {
        out.status = DecodeStatus::Malformed;
        return out;
      }
      if (l4_header > l4_avail) {
        out.status = DecodeStatus::Truncated;
        return out;
      }
      t.proto = Proto::Tcp;
      t.src_port = load_be16(l4);
      t.dst_port = load_be16(l4 + 2);
      d.tcp_seq = load_be32(l4 + 4);
      d.tcp_flags = l4[13];
      break;
    }
    case 17:
      if (l4_avail < kUdpHeader) {
        out.status = DecodeStatus::Truncated;
        return out;
      }
      l4_header = kUdpHeader;
      t.proto = Proto::Udp;
      t.src_port = load_be16(l4);
      t.dst_port = load_be16(l4 + 2);
      break;
    case 1:
      if (l4_avail < kIcmpHeader) {
        out.status = DecodeStatus::Truncated;
        return out;
      }
      l4_header = kIcmpHeader;
      t.proto = Proto::Icmp;
      break;
    default:
      t.proto = Proto::Other;
      break;
  }
  d.payload_offset = static_cast<std::uint16_t>(d.l4_offset + l4_header);
  d.payload_len = static_cast<std::uint16_t>(ip_end - d.payload_offset);
  d.decode_ok = true;
  return out;
}

}  // namespace

std::string_view to_string(Proto proto) {
  switch (proto) {
    case Proto::Tcp: return "TCP";
    case Proto::Udp: return "UDP";
    case Proto::Icmp: return "ICMP";
    case Proto::Other: return "IP";
  }
  return "IP";
}

std::string_view to_string(DecodeStatus status) {
  switch (status) {
    case DecodeStatus::Ok: return "ok";
    case DecodeStatus::Truncated: return "truncated";
    case DecodeStatus::Malformed: return "malformed";
    case DecodeStatus::UnsupportedL3: return "unsupported-l3";
    case DecodeStatus::Oversized: return "oversized";
    case DecodeStatus::PoolExhausted: return "pool-exhausted";
  }
  return "unknown";
}

std::optional<Ipv4Address> Ipv4Address::parse(std::string_view text) {
  std::uint32_t value = 0;
  const char* p = text.data();
  const char* end = text.data() + text.size();
  for (int i = 0; i < 4; ++i) {
    unsigned octet = 0;
    auto [next, ec] = std::from_chars(p, end, octet);
    if (ec != std::errc{} || next == p || octet > 255 || next - p > 3) return std::nullopt;
    value = (value << 8) | octet;
    p = next;
    if (i < 3) {
      if (p == end || *p != '.') return std::nullopt;
      ++p;
    }
  }
  if (p != end) return std::nullopt;
  return Ipv4Address{value};
}

std::string Ipv4Address::to_string() const {
  return std::to_string(value >> 24) + '.' + std::to_string((value >> 16) & 0xff) + '.' +
         std::to_string((value >> 8) & 0xff) + '.' + std::to_string(value & 0xff);
}

std::array<std::uint8_t, 13> FlowKey::encode() const {
  std::array<std::uint8_t, 13> out{};
  out[0] = static_cast<std::uint8_t>(proto);
  auto put32 = [&](std::size_t at, std::uint32_t v) {
    out[at] = static_cast<std::uint8_t>(v >> 24);
    out[at + 1] = static_cast<std::uint8_t>(v >> 16);
    out[at + 2] = static_cast<std::uint8_t>(v >> 8);
    out[at + 3] = static_cast<std::uint8_t>(v);
  };
  put32(1, lo_ip.value);
  put32(5, hi_ip.value);
  out[9] = static_cast<std::uint8_t>(lo_port >> 8);
  out[10] = static_cast<std::uint8_t>(lo_port);
  out[11] = static_cast<std::uint8_t>(hi_port >> 8);
  out[12] = static_cast<std::uint8_t>(hi_port);
  return out;
}

std::size_t FlowKeyHash::operator()(const FlowKey& key) const noexcept {
  std::uint64_t h = (std::uint64_t{key.lo_ip.value} << 32) | key.hi_ip.value;
  h ^= (std::uint64_t{key.lo_port} << 24) ^ (std::uint64_t{key.hi_port} << 8) ^
       static_cast<std::uint64_t>(key.proto);
  // splitmix64 finalizer
  h ^= h >> 30;
  h *= 0xbf58476d1ce4e5b9ULL;
  h ^= h >> 27;
  h *= 0x94d049bb133111ebULL;
  h ^= h >> 31;
  return static_cast<std::size_t>(h);
}

CanonicalKey canonical_key(const FiveTuple& t) {
  const bool forward =
      std::tie(t.src_ip, t.src_port) <= std::tie(t.dst_ip, t.dst_port);
  CanonicalKey out;
  out.key.proto = t.proto;
  if (forward) {
    out.key.lo_ip = t.src_ip;
    out.key.lo_port = t.src_port;
    out.key.hi_ip = t.dst_ip;
    out.key.hi_port = t.dst_port;
    out.direction = Direction::Forward;
  } else {
    out.key.lo_ip = t.dst_ip;
    out.key.lo_port = t.dst_port;
    out.key.hi_ip = t.src_ip;
    out.key.hi_port = t.src_port;
    out.direction = Direction::Reverse;
  }
  return out;
}

PacketPool::PacketPool(std::size_t capacity)
    : capacity_(capacity),
      bytes_(std::make_unique_for_overwrite<std::uint8_t[]>(capacity * kSlotSize)),
      lengths_(capacity, 0),
      descriptors_(capacity),
      allocated_(std::make_unique<std::atomic<bool>[]>(capacity)),
      free_(std::bit_ceil(capacity == 0 ? std::size_t{1} : capacity), RingDiscipline::Mpmc) {
  if (capacity == 0 || capacity > std::numeric_limits<SlotId>::max()) {
    throw std::invalid_argument("packet pool capacity out of range");
  }
  for (std::size_t i = 0; i < capacity; ++i) {
    allocated_[i].store(false, std::memory_order_relaxed);
    free_.try_enqueue(static_cast<SlotId>(i));
  }
}

std::optional<SlotId> PacketPool::store(std::span<const std::uint8_t> frame) {
  if (frame.size() > kSlotSize) {
    return std::nullopt;
  }
  auto slot = free_.try_dequeue();
  if (!slot) {
    return std::nullopt;
  }
  allocated_[*slot].store(true, std::memory_order_relaxed);
  std::memcpy(bytes_.get() + std::size_t{*slot} * kSlotSize, frame.data(), frame.size());
  lengths_[*slot] = static_cast<std::uint16_t>(frame.size());
  writes_.fetch_add(1, std::memory_order_relaxed);
  in_use_.fetch_add(1, std::memory_order_acq_rel);
  return slot;
}

void PacketPool::release(SlotId slot) {
  if (slot >= capacity_ || !allocated_[slot].exchange(false, std::memory_order_acq_rel)) {
    throw std::logic_error("release of a slot that is not allocated: " + std::to_string(slot));
  }
  in_use_.fetch_sub(1, std::memory_order_acq_rel);
  free_.try_enqueue(slot);
}

std::span<const std::uint8_t> PacketPool::frame(SlotId slot) const {
  return {bytes_.get() + std::size_t{slot} * kSlotSize, lengths_[slot]};
}

DecodeResult decode(std::span<const std::uint8_t> frame, std::uint64_t arrival_us,
                    PacketPool& pool) {
  Parsed parsed = parse_headers(frame);
  DecodeResult result;
  result.status = parsed.status;
  if (parsed.status != DecodeStatus::Ok && parsed.status != DecodeStatus::UnsupportedL3) {
    return result;
  }
  if (frame.size() > PacketPool::kSlotSize) {
    result.status = DecodeStatus::Oversized;
    return result;
  }
  auto slot = pool.store(frame);
  if (!slot) {
    result.status = DecodeStatus::PoolExhausted;
    return result;
  }
  parsed.desc.slot = *slot;
  parsed.desc.arrival_us = arrival_us;
  pool.descriptor(*slot) = parsed.desc;
  result.descriptor = parsed.desc;
  return result;
}

}  // namespace splitids
