// Rule language subset: one rule per line,
//
//   action proto src_net src_ports (-> | <>) dst_net dst_ports ( options )
//
// Supported options: content (with depth, offset, distance, within, nocase,
// fast_pattern modifiers, either as `content:"x", depth 3;` or as separate
// `depth:3;` options), byte_test (1/2/4 bytes, >, <, =, optional relative),
// flow (to_client/from_server, to_server/from_client, established,
// only_stream, no_stream, stateless), msg, sid, rev, gid, classtype,
// metadata, service, reference. Any other keyword is kept as an opaque
// option that always evaluates true.

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "splitids/packet.hpp"

namespace splitids {

class ParseError : public std::runtime_error {
 public:
  ParseError(std::string message, std::size_t position)
      : std::runtime_error(message + " (at column " + std::to_string(position + 1) + ")"),
        position_(position) {}

  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

enum class RuleAction : std::uint8_t { Alert, Drop };
enum class RuleProto : std::uint8_t { Ip, Tcp, Udp, Icmp };
enum class RuleDirection : std::uint8_t { Unidirectional, Bidirectional };

std::string_view to_string(RuleAction action);
std::string_view to_string(RuleProto proto);

struct Cidr {
  Ipv4Address network;
  std::uint8_t prefix = 32;

  bool contains(Ipv4Address ip) const;
  friend bool operator==(const Cidr&, const Cidr&) = default;
};

struct AddressSpec {
  enum class Kind : std::uint8_t { Any, Cidr, Variable, List };

  Kind kind = Kind::Any;
  bool negated = false;
  splitids::Cidr cidr;
  std::string variable;             // without the leading '$'
  std::vector<AddressSpec> items;   // Kind::List

  /// Unresolved variables match anything.
  bool matches(Ipv4Address ip) const;
  bool is_any() const { return kind == Kind::Any && !negated; }
  friend bool operator==(const AddressSpec&, const AddressSpec&) = default;
};

struct PortSpec {
  enum class Kind : std::uint8_t { Any, Range, Variable, List };

  Kind kind = Kind::Any;
  bool negated = false;
  std::uint16_t lo = 0;
  std::uint16_t hi = 65535;
  std::string variable;
  std::vector<PortSpec> items;

  bool matches(std::uint16_t port) const;
  bool is_any() const { return kind == Kind::Any && !negated; }
  /// Every matching port, when the spec is a positive set of at most `limit`
  /// ports; nullopt otherwise.
  std::optional<std::vector<std::uint16_t>> enumerate(std::size_t limit) const;
  friend bool operator==(const PortSpec&, const PortSpec&) = default;
};

AddressSpec parse_address_spec(std::string_view text);
PortSpec parse_port_spec(std::string_view text);

struct ContentOption {
  std::vector<std::uint8_t> pattern;
  std::optional<std::uint32_t> depth;
  std::optional<std::int32_t> offset;
  bool relative = false;  // offset/depth count from the end of the previous match
  bool nocase = false;
  bool negated = false;
  bool fast_pattern = false;
  friend bool operator==(const ContentOption&, const ContentOption&) = default;
};

enum class ByteTestOp : std::uint8_t { Greater, Less, Equal };

struct ByteTestOption {
  std::uint8_t nbytes = 1;  // 1, 2 or 4, read big-endian unsigned
  ByteTestOp op = ByteTestOp::Equal;
  std::uint64_t value = 0;
  std::int32_t offset = 0;
  bool relative = false;
  friend bool operator==(const ByteTestOption&, const ByteTestOption&) = default;
};

enum class FlowDirection : std::uint8_t { Any, ToClient, ToServer };

struct FlowOption {
  FlowDirection direction = FlowDirection::Any;
  bool established = false;
  bool only_stream = false;
  bool no_stream = false;
  bool stateless = false;
  friend bool operator==(const FlowOption&, const FlowOption&) = default;
};

struct OpaqueOption {
  std::string keyword;
  std::string value;
  friend bool operator==(const OpaqueOption&, const OpaqueOption&) = default;
};

using RuleOption = std::variant<ContentOption, ByteTestOption, FlowOption, OpaqueOption>;

struct Rule {
  RuleAction action = RuleAction::Alert;
  RuleProto proto = RuleProto::Ip;
  AddressSpec src_net;
  PortSpec src_ports;
  RuleDirection direction = RuleDirection::Unidirectional;
  AddressSpec dst_net;
  PortSpec dst_ports;

  std::vector<RuleOption> options;  // evaluation order

  std::uint32_t gid = 1;
  std::uint32_t sid = 0;
  std::uint32_t rev = 1;
  std::string msg;
  std::string classtype;
  std::string metadata;
  std::string service;
  std::vector<std::string> references;

  /// The rule's flow option, if any.
  const FlowOption* flow() const;
  bool only_stream() const;
  /// True for `metadata: ... policy <name> drop ...`.
  bool has_drop_policy() const;
  std::size_t opaque_count() const;

  friend bool operator==(const Rule&, const Rule&) = default;
};

/// Parses one rule line. Throws ParseError with a column for a malformed
/// header, unbalanced parentheses or quotes, a bad option value, or a
/// missing sid.
Rule parse_rule(std::string_view line);

/// Canonical single-line rendering; parse_rule(format_rule(r)) == r.
std::string format_rule(const Rule& rule);

/// Decodes the body of a quoted content string (|hex| spans and backslash
/// escapes).
std::vector<std::uint8_t> decode_content_string(std::string_view text, std::size_t position = 0);
std::string encode_content_string(std::span<const std::uint8_t> bytes);

struct RuleSet {
  std::vector<Rule> rules;

  /// The first n rules in file order.
  RuleSet take_first(std::size_t n) const;
  std::size_t size() const { return rules.size(); }
  bool empty() const { return rules.empty(); }
};

struct RuleLoadError {
  std::size_t line = 0;  // 1-based
  std::size_t column = 0;
  std::string message;
};

struct RuleLoadResult {
  RuleSet ruleset;
  std::vector<RuleLoadError> errors;
  std::size_t opaque_options = 0;
};

/// Skips blank lines and # comments; a bad line is recorded and skipped.
/// Duplicate sids are rejected after the first occurrence.
RuleLoadResult load_ruleset(std::string_view text);
RuleLoadResult load_ruleset_file(const std::string& path);

/// $NAME bindings. Names that are not bound resolve to `any`.
struct Variables {
  std::map<std::string, AddressSpec, std::less<>> nets;
  std::map<std::string, PortSpec, std::less<>> ports;

  /// Accepts "NAME=spec"; the spec is parsed as an address list if it looks
  /// like one, otherwise as a port list.
  void define(std::string_view assignment);
};

AddressSpec resolve(const AddressSpec& spec, const Variables& vars);
PortSpec resolve(const PortSpec& spec, const Variables& vars);

}  // namespace splitids
