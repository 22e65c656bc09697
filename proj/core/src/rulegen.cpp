#include "splitids/rulegen.hpp"

#include <random>
#include <sstream>

#include "splitids/rules.hpp"

namespace splitids {

namespace {

template <typename T, std::size_t N>
const T& pick(std::mt19937_64& rng, const T (&items)[N]) {
  return items[std::uniform_int_distribution<std::size_t>(0, N - 1)(rng)];
}

bool chance(std::mt19937_64& rng, double p) { return std::bernoulli_distribution(p)(rng); }

int uniform(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

std::string content_text(std::mt19937_64& rng, const std::string& alphabet) {
  const int len = uniform(rng, 3, 8);
  std::vector<std::uint8_t> bytes;
  for (int i = 0; i < len; ++i) {
    if (chance(rng, 0.1)) {
      bytes.push_back(static_cast<std::uint8_t>(uniform(rng, 0, 255)));
    } else {
      bytes.push_back(static_cast<std::uint8_t>(
          alphabet[static_cast<std::size_t>(uniform(rng, 0, static_cast<int>(alphabet.size()) - 1))]));
    }
  }
  return encode_content_string(bytes);
}

}  // namespace

std::vector<std::string> generate_rules(std::size_t n, std::uint64_t seed,
                                        const RuleGenOptions& options) {
  static const char* const kNets[] = {"$HOME_NET", "$EXTERNAL_NET", "any", "10.0.0.0/8",
                                      "192.168.0.0/16"};
  static const char* const kPorts[] = {"80",           "443",      "21",          "25",
                                       "53",           "8080",     "[80,8080,8000]", "any",
                                       "1024:",        "$HTTP_PORTS", "!80",       "[21,25,110,143]"};
  static const char* const kClasstypes[] = {"attempted-recon", "trojan-activity", "web-application-attack",
                                            "policy-violation", "misc-activity", ""};
  static const char* const kFlows[] = {"established,to_server", "established,to_client", "to_server",
                                       "established", "stateless", "to_client,established,only_stream"};

  std::mt19937_64 rng(seed);
  std::vector<std::string> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::ostringstream r;
    const int proto_roll = uniform(rng, 0, 19);
    const char* proto = proto_roll < 14 ? "tcp" : proto_roll < 18 ? "udp" : proto_roll < 19 ? "icmp" : "ip";
    const bool portless = proto_roll >= 18;
    r << (chance(rng, 0.1) ? "drop " : "alert ") << proto << ' ' << pick(rng, kNets) << ' '
      << (portless || chance(rng, 0.8) ? "any" : pick(rng, kPorts))
      << (chance(rng, 0.1) ? " <> " : " -> ") << pick(rng, kNets) << ' '
      << (portless ? "any" : pick(rng, kPorts)) << " (msg:\"SYNTH rule " << i << "\"; ";

    if (proto_roll < 14 && chance(rng, 0.5)) r << "flow:" << pick(rng, kFlows) << "; ";
    const bool contentless = chance(rng, 0.1);
    const int contents = contentless ? 0 : uniform(rng, 1, 3);
    for (int c = 0; c < contents; ++c) {
      const bool negated = c > 0 && chance(rng, 0.15);
      r << "content:" << (negated ? "!" : "") << '"' << content_text(rng, options.alphabet) << '"';
      if (c == 0) {
        if (chance(rng, 0.2)) r << ", depth " << uniform(rng, 8, 64);
        if (chance(rng, 0.1)) r << ", offset " << uniform(rng, 0, 4);
      } else if (!negated) {
        if (chance(rng, 0.4)) r << ", distance " << uniform(rng, 0, 8);
        if (chance(rng, 0.3)) r << ", within " << uniform(rng, 8, 40);
      }
      if (chance(rng, 0.2)) r << ", nocase";
      r << "; ";
    }
    if (contentless || chance(rng, 0.15)) {
      static const char* const kOps[] = {">", "<", "="};
      static const int kWidths[] = {1, 2, 4};
      const bool relative = contents > 0 && chance(rng, 0.5);
      r << "byte_test:" << pick(rng, kWidths) << ',' << pick(rng, kOps) << ','
        << uniform(rng, 0, 300) << ',' << uniform(rng, 0, 6) << (relative ? ",relative" : "")
        << "; ";
    }
    if (chance(rng, 0.05)) r << "pcre:\"/[a-z]{3}\\d/i\"; ";
    const char* classtype = pick(rng, kClasstypes);
    if (*classtype != '\0') r << "classtype:" << classtype << "; ";
    if (chance(rng, 0.1)) r << "metadata:policy security-ips drop, ruleset community; ";
    r << "sid:" << options.first_sid + i << "; rev:" << uniform(rng, 1, 12) << ";)";
    out.push_back(r.str());
  }
  return out;
}

}  // namespace splitids
