#include "splitids/rules.hpp"

#include "splitids/config_error.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace splitids {

namespace {

constexpr std::string_view kSpace = " \t\r\n";

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(kSpace);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(kSpace);
  return s.substr(b, e - b + 1);
}

// Offset of `part` inside `whole`; both must view the same buffer.
std::size_t offset_in(std::string_view whole, std::string_view part) {
  return part.data() >= whole.data() ? static_cast<std::size_t>(part.data() - whole.data()) : 0;
}

template <typename Int>
std::optional<Int> to_int(std::string_view s) {
  s = trim(s);
  Int value{};
  int base = 10;
  if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
    s.remove_prefix(2);
    base = 16;
  }
  if (s.starts_with('+')) s.remove_prefix(1);
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), value, base);
  if (ec != std::errc{} || p != s.data() + s.size() || s.empty()) return std::nullopt;
  return value;
}

// Splits at `sep` at bracket depth 0 and outside double quotes.
std::vector<std::string_view> split_top(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  int depth = 0;
  bool quoted = false;
  std::size_t start = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (quoted) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        quoted = false;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
    } else if (c == '[') {
      ++depth;
    } else if (c == ']') {
      --depth;
    } else if (c == sep && depth == 0) {
      parts.push_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  parts.push_back(s.substr(start));
  return parts;
}

int hex_digit(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

// Unescapes a "..." string; `text` starts at the opening quote. Returns the
// body and sets `consumed` to the length including both quotes.
std::string_view quoted_body(std::string_view text, std::size_t position, std::size_t& consumed) {
  if (text.empty() || text[0] != '"') throw ParseError("expected '\"'", position);
  for (std::size_t i = 1; i < text.size(); ++i) {
    if (text[i] == '\\') {
      ++i;
    } else if (text[i] == '"') {
      consumed = i + 1;
      return text.substr(1, i - 1);
    }
  }
  throw ParseError("unterminated quoted string", position);
}

std::string unescape(std::string_view body) {
  std::string out;
  out.reserve(body.size());
  for (std::size_t i = 0; i < body.size(); ++i) {
    if (body[i] == '\\' && i + 1 < body.size()) ++i;
    out.push_back(body[i]);
  }
  return out;
}

std::string escape(std::string_view text) {
  std::string out;
  for (char c : text) {
    if (c == '"' || c == ';' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

// ---- address and port specs ------------------------------------------------

AddressSpec parse_address(std::string_view text, std::size_t pos) {
  text = trim(text);
  AddressSpec spec;
  if (text.starts_with('!')) {
    spec = parse_address(text.substr(1), pos + 1);
    spec.negated = !spec.negated;
    return spec;
  }
  if (text.empty()) throw ParseError("empty address", pos);
  if (text.front() == '[') {
    if (text.back() != ']') throw ParseError("unbalanced '[' in address list", pos);
    spec.kind = AddressSpec::Kind::List;
    const auto inner = text.substr(1, text.size() - 2);
    for (auto item : split_top(inner, ',')) {
      spec.items.push_back(parse_address(item, pos + 1 + offset_in(inner, item)));
    }
    return spec;
  }
  if (text == "any") return spec;
  if (text.front() == '$') {
    if (text.size() < 2) throw ParseError("empty variable name", pos);
    spec.kind = AddressSpec::Kind::Variable;
    spec.variable = std::string(text.substr(1));
    return spec;
  }
  spec.kind = AddressSpec::Kind::Cidr;
  auto slash = text.find('/');
  auto ip = Ipv4Address::parse(text.substr(0, slash));
  if (!ip) throw ParseError("bad IPv4 address '" + std::string(text) + "'", pos);
  spec.cidr.network = *ip;
  if (slash != std::string_view::npos) {
    auto prefix = to_int<unsigned>(text.substr(slash + 1));
    if (!prefix || *prefix > 32) throw ParseError("bad CIDR prefix", pos + slash + 1);
    spec.cidr.prefix = static_cast<std::uint8_t>(*prefix);
  }
  return spec;
}

PortSpec parse_port(std::string_view text, std::size_t pos) {
  text = trim(text);
  PortSpec spec;
  if (text.starts_with('!')) {
    spec = parse_port(text.substr(1), pos + 1);
    spec.negated = !spec.negated;
    return spec;
  }
  if (text.empty()) throw ParseError("empty port", pos);
  if (text.front() == '[') {
    if (text.back() != ']') throw ParseError("unbalanced '[' in port list", pos);
    spec.kind = PortSpec::Kind::List;
    const auto inner = text.substr(1, text.size() - 2);
    for (auto item : split_top(inner, ',')) {
      spec.items.push_back(parse_port(item, pos + 1 + offset_in(inner, item)));
    }
    return spec;
  }
  if (text == "any") return spec;
  if (text.front() == '$') {
    if (text.size() < 2) throw ParseError("empty variable name", pos);
    spec.kind = PortSpec::Kind::Variable;
    spec.variable = std::string(text.substr(1));
    return spec;
  }
  spec.kind = PortSpec::Kind::Range;
  const auto colon = text.find(':');
  auto port = [&](std::string_view s, std::uint16_t fallback) -> std::uint16_t {
    if (trim(s).empty()) return fallback;
    auto v = to_int<unsigned>(s);
    if (!v || *v > 65535) throw ParseError("bad port '" + std::string(text) + "'", pos);
    return static_cast<std::uint16_t>(*v);
  };
  if (colon == std::string_view::npos) {
    if (text.empty()) throw ParseError("empty port", pos);
    spec.lo = spec.hi = port(text, 0);
  } else {
    if (text.size() == 1) throw ParseError("bad port range", pos);
    spec.lo = port(text.substr(0, colon), 0);
    spec.hi = port(text.substr(colon + 1), 65535);
    if (spec.lo > spec.hi) throw ParseError("empty port range", pos);
  }
  return spec;
}

std::string format_address(const AddressSpec& spec) {
  std::string out = spec.negated ? "!" : "";
  switch (spec.kind) {
    case AddressSpec::Kind::Any:
      out += "any";
      break;
    case AddressSpec::Kind::Cidr:
      out += spec.cidr.network.to_string();
      if (spec.cidr.prefix != 32) out += "/" + std::to_string(spec.cidr.prefix);
      break;
    case AddressSpec::Kind::Variable:
      out += "$" + spec.variable;
      break;
    case AddressSpec::Kind::List: {
      out += "[";
      for (std::size_t i = 0; i < spec.items.size(); ++i) {
        if (i) out += ",";
        out += format_address(spec.items[i]);
      }
      out += "]";
      break;
    }
  }
  return out;
}

std::string format_port(const PortSpec& spec) {
  std::string out = spec.negated ? "!" : "";
  switch (spec.kind) {
    case PortSpec::Kind::Any:
      out += "any";
      break;
    case PortSpec::Kind::Range:
      if (spec.lo == spec.hi) {
        out += std::to_string(spec.lo);
      } else if (spec.hi == 65535) {
        out += std::to_string(spec.lo) + ":";
      } else {
        out += std::to_string(spec.lo) + ":" + std::to_string(spec.hi);
      }
      break;
    case PortSpec::Kind::Variable:
      out += "$" + spec.variable;
      break;
    case PortSpec::Kind::List: {
      out += "[";
      for (std::size_t i = 0; i < spec.items.size(); ++i) {
        if (i) out += ",";
        out += format_port(spec.items[i]);
      }
      out += "]";
      break;
    }
  }
  return out;
}

// ---- options ---------------------------------------------------------------

ContentOption& last_content(Rule& rule, std::string_view keyword, std::size_t pos) {
  for (auto it = rule.options.rbegin(); it != rule.options.rend(); ++it) {
    if (auto* c = std::get_if<ContentOption>(&*it)) return *c;
  }
  throw ParseError("'" + std::string(keyword) + "' without a preceding content", pos);
}

void apply_content_modifier(ContentOption& c, std::string_view key, std::string_view value,
                            std::size_t pos) {
  auto number = [&]() {
    auto v = to_int<std::int32_t>(value);
    if (!v) throw ParseError("bad value for " + std::string(key), pos);
    return *v;
  };
  if (key == "nocase") {
    c.nocase = true;
  } else if (key == "fast_pattern") {
    c.fast_pattern = true;
  } else if (key == "rawbytes") {
    // raw packet data is what is inspected anyway
  } else if (key == "depth" || key == "within") {
    const bool relative = key == "within";
    if (c.depth) throw ParseError("duplicate depth/within", pos);
    if (c.offset && c.relative != relative) throw ParseError("mixing absolute and relative modifiers", pos);
    const auto v = number();
    if (v <= 0) throw ParseError(std::string(key) + " must be positive", pos);
    c.depth = static_cast<std::uint32_t>(v);
    c.relative = relative;
  } else if (key == "offset" || key == "distance") {
    const bool relative = key == "distance";
    if (c.offset) throw ParseError("duplicate offset/distance", pos);
    if (c.depth && c.relative != relative) throw ParseError("mixing absolute and relative modifiers", pos);
    const auto v = number();
    if (!relative && v < 0) throw ParseError("offset must be non-negative", pos);
    c.offset = v;
    c.relative = relative;
  } else {
    throw ParseError("unsupported content modifier '" + std::string(key) + "'", pos);
  }
}

bool is_content_modifier(std::string_view key) {
  return key == "nocase" || key == "fast_pattern" || key == "rawbytes" || key == "depth" ||
         key == "within" || key == "offset" || key == "distance";
}

ContentOption parse_content(std::string_view value, std::size_t pos) {
  ContentOption c;
  auto text = trim(value);
  pos += offset_in(value, text);
  if (text.starts_with('!')) {
    c.negated = true;
    const auto rest = trim(text.substr(1));
    pos += offset_in(text, rest);
    text = rest;
  }
  std::size_t consumed = 0;
  const auto body = quoted_body(text, pos, consumed);
  c.pattern = decode_content_string(body, pos + 1);
  if (c.pattern.empty()) throw ParseError("empty content pattern", pos);
  auto rest = trim(text.substr(consumed));
  if (!rest.empty()) {
    if (rest.front() != ',') throw ParseError("expected ',' after content string", pos + consumed);
    const auto mods = rest.substr(1);
    for (auto mod : split_top(mods, ',')) {
      const auto m = trim(mod);
      const auto mpos = pos + consumed + offset_in(rest, m);
      if (m.empty()) throw ParseError("empty content modifier", mpos);
      const auto space = m.find_first_of(kSpace);
      const auto key = m.substr(0, space);
      const auto arg = space == std::string_view::npos ? std::string_view{} : trim(m.substr(space));
      apply_content_modifier(c, key, arg, mpos);
    }
  }
  return c;
}

ByteTestOption parse_byte_test(std::string_view value, std::size_t pos) {
  const auto parts = split_top(value, ',');
  if (parts.size() < 4) throw ParseError("byte_test needs nbytes, op, value, offset", pos);
  ByteTestOption bt;
  auto n = to_int<unsigned>(parts[0]);
  if (!n || (*n != 1 && *n != 2 && *n != 4)) throw ParseError("byte_test nbytes must be 1, 2 or 4", pos);
  bt.nbytes = static_cast<std::uint8_t>(*n);
  const auto op = trim(parts[1]);
  if (op == ">") {
    bt.op = ByteTestOp::Greater;
  } else if (op == "<") {
    bt.op = ByteTestOp::Less;
  } else if (op == "=") {
    bt.op = ByteTestOp::Equal;
  } else {
    throw ParseError("unsupported byte_test operator '" + std::string(op) + "'", pos);
  }
  auto v = to_int<std::uint64_t>(parts[2]);
  if (!v) throw ParseError("bad byte_test value", pos);
  bt.value = *v;
  auto off = to_int<std::int32_t>(parts[3]);
  if (!off) throw ParseError("bad byte_test offset", pos);
  bt.offset = *off;
  for (std::size_t i = 4; i < parts.size(); ++i) {
    const auto flag = trim(parts[i]);
    if (flag == "relative") {
      bt.relative = true;
    } else if (flag != "big") {
      throw ParseError("unsupported byte_test flag '" + std::string(flag) + "'", pos);
    }
  }
  if (!bt.relative && bt.offset < 0) throw ParseError("negative absolute byte_test offset", pos);
  return bt;
}

FlowOption parse_flow(std::string_view value, std::size_t pos) {
  FlowOption f;
  if (trim(value).empty()) return f;
  for (auto part : split_top(value, ',')) {
    const auto t = trim(part);
    if (t == "to_client" || t == "from_server") {
      f.direction = FlowDirection::ToClient;
    } else if (t == "to_server" || t == "from_client") {
      f.direction = FlowDirection::ToServer;
    } else if (t == "established") {
      f.established = true;
    } else if (t == "only_stream") {
      f.only_stream = true;
    } else if (t == "no_stream") {
      f.no_stream = true;
    } else if (t == "stateless") {
      f.stateless = true;
    } else {
      throw ParseError("unsupported flow option '" + std::string(t) + "'", pos);
    }
  }
  return f;
}

void parse_option(Rule& rule, std::string_view raw, std::size_t pos, bool& have_sid) {
  const auto opt = trim(raw);
  pos += offset_in(raw, opt);
  const auto colon = opt.find(':');
  const auto keyword = trim(opt.substr(0, colon));
  const auto value = colon == std::string_view::npos ? std::string_view{} : opt.substr(colon + 1);
  const auto vpos = colon == std::string_view::npos ? pos : pos + colon + 1;
  const auto tv = trim(value);

  auto uint_value = [&]() {
    auto v = to_int<std::uint32_t>(tv);
    if (!v) throw ParseError("bad numeric value for " + std::string(keyword), vpos);
    return *v;
  };

  if (keyword.empty()) throw ParseError("empty option keyword", pos);
  if (keyword == "msg") {
    std::size_t consumed = 0;
    const auto t = trim(value);
    rule.msg = unescape(quoted_body(t, vpos + offset_in(value, t), consumed));
  } else if (keyword == "sid") {
    rule.sid = uint_value();
    have_sid = true;
  } else if (keyword == "rev") {
    rule.rev = uint_value();
  } else if (keyword == "gid") {
    rule.gid = uint_value();
  } else if (keyword == "classtype") {
    rule.classtype = std::string(tv);
  } else if (keyword == "metadata") {
    rule.metadata = std::string(tv);
  } else if (keyword == "service") {
    rule.service = std::string(tv);
  } else if (keyword == "reference") {
    rule.references.emplace_back(tv);
  } else if (keyword == "content") {
    rule.options.emplace_back(parse_content(value, vpos));
  } else if (is_content_modifier(keyword)) {
    apply_content_modifier(last_content(rule, keyword, pos), keyword, tv, vpos);
  } else if (keyword == "byte_test") {
    rule.options.emplace_back(parse_byte_test(value, vpos));
  } else if (keyword == "flow") {
    rule.options.emplace_back(parse_flow(value, vpos));
  } else {
    rule.options.emplace_back(OpaqueOption{std::string(keyword), std::string(tv)});
  }
}

// Header tokens separated by whitespace; brackets may contain spaces.
std::vector<std::pair<std::string_view, std::size_t>> header_tokens(std::string_view header) {
  std::vector<std::pair<std::string_view, std::size_t>> tokens;
  std::size_t i = 0;
  while (i < header.size()) {
    while (i < header.size() && kSpace.find(header[i]) != std::string_view::npos) ++i;
    if (i >= header.size()) break;
    const std::size_t start = i;
    int depth = 0;
    while (i < header.size() &&
           (depth > 0 || kSpace.find(header[i]) == std::string_view::npos)) {
      if (header[i] == '[') ++depth;
      if (header[i] == ']') --depth;
      ++i;
    }
    if (depth != 0) throw ParseError("unbalanced '[' in rule header", start);
    tokens.emplace_back(header.substr(start, i - start), start);
  }
  return tokens;
}

std::string format_content(const ContentOption& c) {
  std::string out = "content:";
  if (c.negated) out += "!";
  out += "\"" + encode_content_string(c.pattern) + "\"";
  if (c.relative) {
    if (c.offset) out += ", distance " + std::to_string(*c.offset);
    if (c.depth) out += ", within " + std::to_string(*c.depth);
  } else {
    if (c.offset) out += ", offset " + std::to_string(*c.offset);
    if (c.depth) out += ", depth " + std::to_string(*c.depth);
  }
  if (c.nocase) out += ", nocase";
  if (c.fast_pattern) out += ", fast_pattern";
  return out;
}

std::string format_option(const RuleOption& option) {
  return std::visit(
      [](const auto& o) -> std::string {
        using T = std::decay_t<decltype(o)>;
        if constexpr (std::is_same_v<T, ContentOption>) {
          return format_content(o);
        } else if constexpr (std::is_same_v<T, ByteTestOption>) {
          const char* op = o.op == ByteTestOp::Greater ? ">" : o.op == ByteTestOp::Less ? "<" : "=";
          std::string out = "byte_test:" + std::to_string(o.nbytes) + "," + op + "," +
                            std::to_string(o.value) + "," + std::to_string(o.offset);
          if (o.relative) out += ",relative";
          return out;
        } else if constexpr (std::is_same_v<T, FlowOption>) {
          std::vector<std::string> parts;
          if (o.direction == FlowDirection::ToClient) parts.emplace_back("to_client");
          if (o.direction == FlowDirection::ToServer) parts.emplace_back("to_server");
          if (o.established) parts.emplace_back("established");
          if (o.only_stream) parts.emplace_back("only_stream");
          if (o.no_stream) parts.emplace_back("no_stream");
          if (o.stateless) parts.emplace_back("stateless");
          std::string out = "flow:";
          for (std::size_t i = 0; i < parts.size(); ++i) {
            if (i) out += ",";
            out += parts[i];
          }
          return out;
        } else {
          return o.value.empty() ? o.keyword : o.keyword + ":" + o.value;
        }
      },
      option);
}

}  // namespace

std::string_view to_string(RuleAction action) {
  return action == RuleAction::Drop ? "drop" : "alert";
}

std::string_view to_string(RuleProto proto) {
  switch (proto) {
    case RuleProto::Ip: return "ip";
    case RuleProto::Tcp: return "tcp";
    case RuleProto::Udp: return "udp";
    case RuleProto::Icmp: return "icmp";
  }
  return "ip";
}

bool Cidr::contains(Ipv4Address ip) const {
  if (prefix == 0) return true;
  const std::uint32_t mask = prefix >= 32 ? 0xffffffffu : ~((1u << (32 - prefix)) - 1);
  return (ip.value & mask) == (network.value & mask);
}

bool AddressSpec::matches(Ipv4Address ip) const {
  bool base = true;
  switch (kind) {
    case Kind::Any:
    case Kind::Variable:
      base = true;
      break;
    case Kind::Cidr:
      base = cidr.contains(ip);
      break;
    case Kind::List: {
      bool any_positive = false;
      bool positive_hit = false;
      for (const auto& item : items) {
        if (item.negated) {
          if (!item.matches(ip)) {
            base = false;
            break;
          }
        } else {
          any_positive = true;
          positive_hit = positive_hit || item.matches(ip);
        }
      }
      if (base) base = !any_positive || positive_hit;
      break;
    }
  }
  return negated ? !base : base;
}

bool PortSpec::matches(std::uint16_t port) const {
  bool base = true;
  switch (kind) {
    case Kind::Any:
    case Kind::Variable:
      base = true;
      break;
    case Kind::Range:
      base = port >= lo && port <= hi;
      break;
    case Kind::List: {
      bool any_positive = false;
      bool positive_hit = false;
      for (const auto& item : items) {
        if (item.negated) {
          if (!item.matches(port)) {
            base = false;
            break;
          }
        } else {
          any_positive = true;
          positive_hit = positive_hit || item.matches(port);
        }
      }
      if (base) base = !any_positive || positive_hit;
      break;
    }
  }
  return negated ? !base : base;
}

std::optional<std::vector<std::uint16_t>> PortSpec::enumerate(std::size_t limit) const {
  if (negated) return std::nullopt;
  std::vector<std::uint16_t> out;
  switch (kind) {
    case Kind::Any:
    case Kind::Variable:
      return std::nullopt;
    case Kind::Range:
      if (static_cast<std::size_t>(hi - lo) + 1 > limit) return std::nullopt;
      for (std::uint32_t p = lo; p <= hi; ++p) out.push_back(static_cast<std::uint16_t>(p));
      return out;
    case Kind::List:
      for (const auto& item : items) {
        auto sub = item.enumerate(limit);
        if (!sub) return std::nullopt;
        out.insert(out.end(), sub->begin(), sub->end());
        if (out.size() > limit) return std::nullopt;
      }
      std::sort(out.begin(), out.end());
      out.erase(std::unique(out.begin(), out.end()), out.end());
      if (out.empty()) return std::nullopt;
      return out;
  }
  return std::nullopt;
}

AddressSpec parse_address_spec(std::string_view text) { return parse_address(text, 0); }
PortSpec parse_port_spec(std::string_view text) { return parse_port(text, 0); }

std::vector<std::uint8_t> decode_content_string(std::string_view text, std::size_t position) {
  std::vector<std::uint8_t> out;
  bool hex = false;
  int pending = -1;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (hex) {
      if (c == '|') {
        if (pending >= 0) throw ParseError("odd number of hex digits", position + i);
        hex = false;
      } else if (c == ' ' || c == '\t') {
        if (pending >= 0) throw ParseError("split hex byte", position + i);
      } else {
        const int d = hex_digit(c);
        if (d < 0) throw ParseError("bad hex digit in content", position + i);
        if (pending < 0) {
          pending = d;
        } else {
          out.push_back(static_cast<std::uint8_t>(pending * 16 + d));
          pending = -1;
        }
      }
      continue;
    }
    if (c == '|') {
      hex = true;
    } else if (c == '\\') {
      if (i + 1 >= text.size()) throw ParseError("dangling escape in content", position + i);
      out.push_back(static_cast<std::uint8_t>(text[++i]));
    } else {
      out.push_back(static_cast<std::uint8_t>(c));
    }
  }
  if (hex) throw ParseError("unterminated hex span in content", position + text.size());
  return out;
}

std::string encode_content_string(std::span<const std::uint8_t> bytes) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  bool hex = false;
  for (std::uint8_t b : bytes) {
    const bool plain = b >= 0x20 && b < 0x7f && b != '"' && b != ';' && b != '\\' && b != '|';
    if (plain) {
      if (hex) {
        out += '|';
        hex = false;
      }
      out += static_cast<char>(b);
    } else {
      if (!hex) {
        out += '|';
        hex = true;
      } else {
        out += ' ';
      }
      out += kHex[b >> 4];
      out += kHex[b & 0xf];
    }
  }
  if (hex) out += '|';
  return out;
}

const FlowOption* Rule::flow() const {
  for (const auto& o : options) {
    if (const auto* f = std::get_if<FlowOption>(&o)) return f;
  }
  return nullptr;
}

bool Rule::only_stream() const {
  const auto* f = flow();
  return f != nullptr && f->only_stream;
}

bool Rule::has_drop_policy() const {
  for (auto entry : split_top(metadata, ',')) {
    entry = trim(entry);
    if (!entry.starts_with("policy")) continue;
    const auto last_space = entry.find_last_of(kSpace);
    if (last_space != std::string_view::npos && entry.substr(last_space + 1) == "drop") {
      return true;
    }
  }
  return false;
}

std::size_t Rule::opaque_count() const {
  return static_cast<std::size_t>(std::count_if(options.begin(), options.end(), [](const auto& o) {
    return std::holds_alternative<OpaqueOption>(o);
  }));
}

Rule parse_rule(std::string_view line) {
  const auto open = line.find('(');
  if (open == std::string_view::npos) throw ParseError("missing '(' before rule options", line.size());

  // Closing parenthesis: first ')' outside quotes.
  std::size_t close = std::string_view::npos;
  bool quoted = false;
  for (std::size_t i = open + 1; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        quoted = false;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ')') {
      close = i;
      break;
    }
  }
  if (quoted) throw ParseError("unbalanced quotes in rule options", open);
  if (close == std::string_view::npos) throw ParseError("unbalanced parentheses", open);
  if (!trim(line.substr(close + 1)).empty()) {
    throw ParseError("trailing text after rule options", close + 1);
  }

  Rule rule;
  const auto header = line.substr(0, open);
  const auto tokens = header_tokens(header);
  if (tokens.size() != 7) {
    throw ParseError("rule header needs 7 fields, found " + std::to_string(tokens.size()),
                     tokens.empty() ? 0 : tokens.back().second);
  }
  const auto& [action, action_pos] = tokens[0];
  if (action == "alert") {
    rule.action = RuleAction::Alert;
  } else if (action == "drop" || action == "block" || action == "sdrop" || action == "reject") {
    rule.action = RuleAction::Drop;
  } else {
    throw ParseError("unsupported rule action '" + std::string(action) + "'", action_pos);
  }
  const auto& [proto, proto_pos] = tokens[1];
  if (proto == "tcp") {
    rule.proto = RuleProto::Tcp;
  } else if (proto == "udp") {
    rule.proto = RuleProto::Udp;
  } else if (proto == "icmp") {
    rule.proto = RuleProto::Icmp;
  } else if (proto == "ip") {
    rule.proto = RuleProto::Ip;
  } else {
    throw ParseError("unsupported protocol '" + std::string(proto) + "'", proto_pos);
  }
  rule.src_net = parse_address(tokens[2].first, tokens[2].second);
  rule.src_ports = parse_port(tokens[3].first, tokens[3].second);
  if (tokens[4].first == "->") {
    rule.direction = RuleDirection::Unidirectional;
  } else if (tokens[4].first == "<>") {
    rule.direction = RuleDirection::Bidirectional;
  } else {
    throw ParseError("bad direction operator '" + std::string(tokens[4].first) + "'",
                     tokens[4].second);
  }
  rule.dst_net = parse_address(tokens[5].first, tokens[5].second);
  rule.dst_ports = parse_port(tokens[6].first, tokens[6].second);

  const auto body = line.substr(open + 1, close - open - 1);
  bool have_sid = false;
  // Split at ';' outside quotes.
  std::size_t start = 0;
  quoted = false;
  for (std::size_t i = 0; i <= body.size(); ++i) {
    if (i < body.size()) {
      const char c = body[i];
      if (quoted) {
        if (c == '\\') {
          ++i;
        } else if (c == '"') {
          quoted = false;
        }
        continue;
      }
      if (c == '"') {
        quoted = true;
        continue;
      }
      if (c != ';') continue;
    }
    const auto raw = body.substr(start, std::min(i, body.size()) - start);
    if (!trim(raw).empty()) parse_option(rule, raw, open + 1 + start, have_sid);
    start = i + 1;
  }
  if (!have_sid) throw ParseError("rule has no sid", close);
  return rule;
}

std::string format_rule(const Rule& rule) {
  std::string out;
  out += to_string(rule.action);
  out += ' ';
  out += to_string(rule.proto);
  out += ' ' + format_address(rule.src_net) + ' ' + format_port(rule.src_ports);
  out += rule.direction == RuleDirection::Bidirectional ? " <> " : " -> ";
  out += format_address(rule.dst_net) + ' ' + format_port(rule.dst_ports);
  out += " (";
  std::vector<std::string> parts;
  if (!rule.msg.empty()) parts.push_back("msg:\"" + escape(rule.msg) + "\"");
  for (const auto& o : rule.options) parts.push_back(format_option(o));
  if (!rule.metadata.empty()) parts.push_back("metadata:" + rule.metadata);
  if (!rule.service.empty()) parts.push_back("service:" + rule.service);
  for (const auto& r : rule.references) parts.push_back("reference:" + r);
  if (!rule.classtype.empty()) parts.push_back("classtype:" + rule.classtype);
  if (rule.gid != 1) parts.push_back("gid:" + std::to_string(rule.gid));
  parts.push_back("sid:" + std::to_string(rule.sid));
  parts.push_back("rev:" + std::to_string(rule.rev));
  for (const auto& p : parts) out += p + "; ";
  out.back() = ')';
  return out;
}

RuleSet RuleSet::take_first(std::size_t n) const {
  RuleSet out;
  const auto count = std::min(n, rules.size());
  out.rules.assign(rules.begin(), rules.begin() + static_cast<std::ptrdiff_t>(count));
  return out;
}

RuleLoadResult load_ruleset(std::string_view text) {
  RuleLoadResult result;
  std::set<std::pair<std::uint32_t, std::uint32_t>> seen;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const auto line = trim(text.substr(start, end - start));
    ++line_no;
    start = end + 1;
    if (line.empty() || line.front() == '#') {
      if (end == text.size()) break;
      continue;
    }
    try {
      Rule rule = parse_rule(line);
      if (!seen.emplace(rule.gid, rule.sid).second) {
        result.errors.push_back({line_no, 1, "duplicate sid " + std::to_string(rule.sid)});
      } else {
        result.opaque_options += rule.opaque_count();
        result.ruleset.rules.push_back(std::move(rule));
      }
    } catch (const ParseError& e) {
      result.errors.push_back({line_no, e.position() + 1, e.what()});
    }
    if (end == text.size()) break;
  }
  return result;
}

RuleLoadResult load_ruleset_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open rules file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_ruleset(ss.str());
}

void Variables::define(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw std::invalid_argument("variable definition must look like NAME=spec");
  }
  auto name = trim(assignment.substr(0, eq));
  if (name.starts_with('$')) name.remove_prefix(1);
  if (name.empty()) throw std::invalid_argument("empty variable name");
  const auto spec = trim(assignment.substr(eq + 1));
  if (name.ends_with("PORTS")) {
    ports[std::string(name)] = parse_port_spec(spec);
  } else {
    nets[std::string(name)] = parse_address_spec(spec);
  }
}

namespace {

template <typename Spec, typename Map>
Spec resolve_spec(const Spec& spec, const Map& bindings, int depth) {
  if (depth > 8) throw std::invalid_argument("variable definitions nest too deeply");
  Spec out = spec;
  if (spec.kind == Spec::Kind::Variable) {
    auto it = bindings.find(spec.variable);
    if (it == bindings.end()) {
      out = Spec{};
    } else {
      out = resolve_spec(it->second, bindings, depth + 1);
    }
    out.negated = out.negated != spec.negated;
    return out;
  }
  if (spec.kind == Spec::Kind::List) {
    for (auto& item : out.items) item = resolve_spec(item, bindings, depth + 1);
  }
  return out;
}

}  // namespace

AddressSpec resolve(const AddressSpec& spec, const Variables& vars) {
  return resolve_spec(spec, vars.nets, 0);
}

PortSpec resolve(const PortSpec& spec, const Variables& vars) {
  return resolve_spec(spec, vars.ports, 0);
}

}  // namespace splitids
