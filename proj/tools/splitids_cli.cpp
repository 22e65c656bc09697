// splitids: run experiments, generate workloads and rules, check rule files.
//
// Exit status: 0 clean run, 1 rule file with rejected lines (check-rules)
// or unexpected failure, 2 configuration error, 3 lifecycle order error,
// 4 accounting mismatch in a report.

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "splitids/experiment.hpp"
#include "splitids/lifecycle.hpp"
#include "splitids/pcap.hpp"
#include "splitids/rulegen.hpp"
#include "splitids/rules.hpp"
#include "splitids/workload.hpp"

namespace {

using splitids::ConfigError;

constexpr int kExitOk = 0;
constexpr int kExitRejected = 1;
constexpr int kExitConfig = 2;
constexpr int kExitLifecycle = 3;
constexpr int kExitAccounting = 4;

std::uint64_t parse_uint(const std::string& key, const std::string& text) {
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || p != text.data() + text.size()) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + text + "'");
  }
  return v;
}

double parse_double(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError(key + ": expected a number, got '" + text + "'");
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw ConfigError(key + ": expected a boolean, got '" + text + "'");
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = text.find(sep, start);
    out.push_back(text.substr(start, pos - start));
    if (pos == std::string::npos) return out;
    start = pos + 1;
  }
}

struct Settings {
  splitids::ExperimentConfig experiment;
  std::string alert_mode = "fast";
  std::string alert_file;
  std::string report_format = "text";
  std::string out;
  std::string tx_pcap;
};

void apply_synth(splitids::WorkloadSpec& w, const std::string& value) {
  const auto parts = split(value, ',');
  if (parts.size() != 2) throw ConfigError("synth: expected SIZE,FLOWS, got '" + value + "'");
  w.kind = splitids::WorkloadSpec::Kind::Synth;
  w.packet_size = parse_uint("synth", parts[0]);
  w.n_flows = parse_uint("synth", parts[1]);
}

void apply_attack(splitids::WorkloadSpec& w, const std::string& value) {
  splitids::AttackInjection attack;
  attack.rate = parse_double("attack", value);
  w.attack = attack;
}

/// One setting by name; CLI options and --config keys share this path.
void apply_setting(Settings& s, std::string key, const std::string& value) {
  for (auto& ch : key) {
    if (ch == '_') ch = '-';
  }
  auto& w = s.experiment.workload;
  auto& e = s.experiment.engine;
  auto& r = s.experiment.run;
  if (key == "mode") {
    if (value == "sim" || value == "simulated") {
      r.mode = splitids::RunMode::Simulated;
    } else if (value == "real") {
      r.mode = splitids::RunMode::Real;
    } else {
      throw ConfigError("mode: expected sim or real, got '" + value + "'");
    }
  } else if (key == "synth") {
    apply_synth(w, value);
  } else if (key == "pcap") {
    w.kind = splitids::WorkloadSpec::Kind::Pcap;
    w.pcap_path = value;
  } else if (key == "count") {
    w.packet_count = parse_uint(key, value);
  } else if (key == "repeat") {
    w.repeat = parse_bool(key, value);
  } else if (key == "seed") {
    w.seed = parse_uint(key, value);
  } else if (key == "server-ports") {
    w.server_ports.clear();
    for (const auto& p : split(value, ',')) {
      const auto port = parse_uint(key, p);
      if (port == 0 || port > 65535) throw ConfigError("server-ports: bad port " + p);
      w.server_ports.push_back(static_cast<std::uint16_t>(port));
    }
  } else if (key == "attack") {
    apply_attack(w, value);
  } else if (key == "threads") {
    e.n_workers = parse_uint(key, value);
  } else if (key == "acquire-threads") {
    e.n_acquire_threads = parse_uint(key, value);
  } else if (key == "burst") {
    e.burst_size = parse_uint(key, value);
  } else if (key == "ring-capacity") {
    e.ring_capacity = parse_uint(key, value);
  } else if (key == "pool-capacity") {
    e.pool_capacity = parse_uint(key, value);
  } else if (key == "rules") {
    e.rules_path = value;
  } else if (key == "take-first") {
    e.take_first = parse_uint(key, value);
  } else if (key == "var") {
    try {
      e.vars.define(value);
    } catch (const std::invalid_argument& ex) {
      throw ConfigError(std::string("var: ") + ex.what());
    }
  } else if (key == "inline") {
    e.inline_mode = parse_bool(key, value);
  } else if (key == "useless") {
    e.useless_mode = parse_bool(key, value);
  } else if (key == "cpufreq") {
    e.cpufreq = parse_double(key, value);
  } else if (key == "cost-model") {
    for (const auto& item : split(value, ',')) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw ConfigError("cost-model: expected key=value, got '" + item + "'");
      try {
        splitids::apply_cost_model_setting(e.cost, item.substr(0, eq), item.substr(eq + 1));
      } catch (const std::invalid_argument& ex) {
        throw ConfigError(std::string("cost-model: ") + ex.what());
      }
    }
  } else if (key == "rate-bps") {
    r.line_rate_bps = parse_double(key, value);
  } else if (key == "rate-pps") {
    r.rate_pps = parse_double(key, value);
  } else if (key == "duration") {
    r.duration_s = parse_double(key, value);
  } else if (key == "interval") {
    r.interval_s = parse_double(key, value);
  } else if (key == "alert") {
    if (value != "fast" && value != "none") throw ConfigError("alert: expected fast or none");
    s.alert_mode = value;
  } else if (key == "alert-file") {
    s.alert_file = value;
  } else if (key == "report") {
    if (value != "text" && value != "csv") throw ConfigError("report: expected text or csv");
    s.report_format = value;
  } else if (key == "out") {
    s.out = value;
  } else if (key == "tx-pcap") {
    s.tx_pcap = value;
  } else {
    throw ConfigError("unknown setting '" + key + "'");
  }
}

std::string json_scalar(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number()) return v.dump();
  throw ConfigError("expected a scalar, got " + v.dump());
}

void apply_config_file(Settings& s, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigError("config file " + path + ": " + ex.what());
  }
  if (!doc.is_object()) throw ConfigError("config file must hold a JSON object");
  for (const auto& [key, value] : doc.items()) {
    if (key == "cost_model" || key == "cost-model") {
      if (!value.is_object()) throw ConfigError("cost_model must be an object");
      for (const auto& [k, v] : value.items()) {
        apply_setting(s, "cost-model", k + "=" + json_scalar(v));
      }
    } else if (key == "vars") {
      if (!value.is_object()) throw ConfigError("vars must be an object");
      for (const auto& [k, v] : value.items()) apply_setting(s, "var", k + "=" + json_scalar(v));
    } else if (key == "synth" && value.is_object()) {
      apply_setting(s, "synth", json_scalar(value.at("size")) + "," + json_scalar(value.at("flows")));
    } else if (value.is_array()) {
      std::string joined;
      for (const auto& item : value) joined += (joined.empty() ? "" : ",") + json_scalar(item);
      apply_setting(s, key, joined);
    } else if (key == "rules" || key == "pcap") {
      // Input files named in a config file are relative to that file.
      std::filesystem::path p = json_scalar(value);
      if (p.is_relative()) p = std::filesystem::path(path).parent_path() / p;
      apply_setting(s, key, p.string());
    } else {
      apply_setting(s, key, json_scalar(value));
    }
  }
}

struct OptionBinding {
  CLI::Option* option;
  std::string key;
  std::string* value;  // null for flags
  std::vector<std::string>* values = nullptr;
};

int cmd_run(Settings& s, const std::vector<OptionBinding>& bindings, const std::string& config) {
  if (!config.empty()) apply_config_file(s, config);
  for (const auto& b : bindings) {
    if (b.option->count() == 0) continue;
    if (b.values != nullptr) {
      for (const auto& v : *b.values) apply_setting(s, b.key, v);
    } else {
      apply_setting(s, b.key, b.value ? *b.value : "true");
    }
  }

  std::ofstream alert_file;
  std::unique_ptr<splitids::AlertSink> alerts;
  if (s.alert_mode == "fast") {
    std::ostream* target = &std::cout;
    if (!s.alert_file.empty()) {
      alert_file.open(s.alert_file);
      if (!alert_file) throw ConfigError("cannot write alert file " + s.alert_file);
      target = &alert_file;
    }
    alerts = std::make_unique<splitids::FastAlertWriter>(*target);
  } else {
    alerts = std::make_unique<splitids::NullAlertSink>();
  }
  std::unique_ptr<splitids::PcapSink> tx;
  if (!s.tx_pcap.empty()) {
    if (!s.experiment.engine.inline_mode) throw ConfigError("tx-pcap needs --inline");
    tx = std::make_unique<splitids::PcapSink>(s.tx_pcap);
  }
  s.experiment.alerts = alerts.get();
  s.experiment.tx_sink = tx.get();

  const splitids::Report report = splitids::run_experiment(s.experiment);
  if (tx) tx->close();

  std::ofstream out_file;
  std::ostream* out = &std::cout;
  if (!s.out.empty()) {
    out_file.open(s.out);
    if (!out_file) throw ConfigError("cannot write report file " + s.out);
    out = &out_file;
  }
  if (s.report_format == "csv") {
    splitids::write_report_csv(report, *out);
  } else {
    splitids::write_report_text(report, *out);
  }
  if (!report.conserved()) {
    std::cerr << "error: packet accounting does not balance\n";
    return kExitAccounting;
  }
  return kExitOk;
}

int cmd_gen_pcap(const std::string& synth, std::uint64_t count, std::uint64_t seed,
                 const std::string& attack, const std::string& server_ports,
                 std::optional<unsigned> heartbleed, const std::string& out) {
  if (heartbleed) {
    if (*heartbleed > 0xffff) throw ConfigError("heartbleed length must fit 16 bits");
    const splitids::FiveTuple c2s{splitids::Proto::Tcp,
                                  splitids::Ipv4Address::from_octets(10, 0, 0, 1),
                                  splitids::Ipv4Address::from_octets(10, 0, 0, 2), 5555, 443};
    const auto payload = splitids::heartbeat_payload(static_cast<std::uint16_t>(*heartbleed));
    splitids::pcap_write(out, splitids::tcp_session(c2s, payload));
    return kExitOk;
  }
  Settings s;
  apply_synth(s.experiment.workload, synth);
  s.experiment.workload.packet_count = count;
  s.experiment.workload.seed = seed;
  if (!attack.empty()) apply_attack(s.experiment.workload, attack);
  if (!server_ports.empty()) apply_setting(s, "server-ports", server_ports);
  const splitids::SynthGenerator gen(s.experiment.workload);
  splitids::PcapWriter writer(out);
  splitids::Frame frame;
  for (std::uint64_t k = 0; k < gen.count(); ++k) {
    gen.frame_into(k, frame);
    writer.write(frame, k);
  }
  writer.close();
  std::cerr << "wrote " << gen.count() << " frames (" << gen.attack_count() << " attacks) to "
            << out << '\n';
  return kExitOk;
}

int cmd_check_rules(const std::string& path, std::optional<std::size_t> take_first, bool print) {
  auto result = splitids::load_ruleset_file(path);
  for (const auto& err : result.errors) {
    std::cerr << path << ":" << err.line << ":" << err.column << ": " << err.message << '\n';
  }
  auto rules = take_first ? result.ruleset.take_first(*take_first) : result.ruleset;
  if (print) {
    for (const auto& r : rules.rules) std::cout << splitids::format_rule(r) << '\n';
  }
  std::cerr << rules.size() << " rules loaded, " << result.errors.size() << " rejected, "
            << result.opaque_options << " opaque options\n";
  return result.errors.empty() ? kExitOk : kExitRejected;
}

int cmd_gen_rules(std::size_t count, std::uint64_t seed, const std::string& out) {
  const auto lines = splitids::generate_rules(count, seed);
  std::ofstream file;
  std::ostream* target = &std::cout;
  if (!out.empty()) {
    file.open(out);
    if (!file) throw ConfigError("cannot write " + out);
    target = &file;
  }
  for (const auto& line : lines) *target << line << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"splitids - partitioned intrusion detection pipeline"};
  app.require_subcommand(1);

  // run
  Settings settings;
  std::string config;
  std::vector<OptionBinding> bindings;
  static std::vector<std::unique_ptr<std::string>> storage;
  static std::vector<std::unique_ptr<std::vector<std::string>>> multi_storage;
  auto* run = app.add_subcommand("run", "Run an experiment and print a report");
  run->add_option("--config", config, "JSON file with settings; command line options win")
      ->check(CLI::ExistingFile);
  auto bind = [&](const std::string& flag, const std::string& key, const std::string& help) {
    storage.push_back(std::make_unique<std::string>());
    bindings.push_back({run->add_option(flag, *storage.back(), help), key, storage.back().get()});
  };
  auto bind_flag = [&](const std::string& flag, const std::string& key, const std::string& help) {
    bindings.push_back({run->add_flag(flag, help), key, nullptr});
  };
  auto bind_multi = [&](const std::string& flag, const std::string& key, const std::string& help) {
    multi_storage.push_back(std::make_unique<std::vector<std::string>>());
    bindings.push_back(
        {run->add_option(flag, *multi_storage.back(), help), key, nullptr, multi_storage.back().get()});
  };
  bind("--mode", "mode", "sim (deterministic, default) or real (threads and wall time)");
  bind("--synth", "synth", "Synthetic workload SIZE,FLOWS, e.g. 64,256");
  bind("--pcap", "pcap", "Replay frames from a pcap file");
  bind("--count", "count", "Packets to generate, or to replay with --repeat");
  bind_flag("--repeat", "repeat", "Cycle the pcap until --count packets");
  bind("--seed", "seed", "Workload seed");
  bind("--server-ports", "server-ports", "Comma list of synthetic server ports");
  bind("--attack", "attack", "Fraction of packets carrying a heartbeat attack payload");
  bind("--threads", "threads", "Analysis workers (one RX ring each)");
  bind("--acquire-threads", "acquire-threads", "Acquisition threads (real mode)");
  bind("--burst", "burst", "Acquisition burst size");
  bind("--ring-capacity", "ring-capacity", "Entries per RX ring (power of two)");
  bind("--pool-capacity", "pool-capacity", "Packet pool slots");
  bind("--rules", "rules", "Rule file");
  bind("--take-first", "take-first", "Use only the first N rules of the file");
  bind_multi("--var", "var", "Variable binding NAME=spec, repeatable");
  bind_flag("--inline", "inline", "Inline mode: drop rules block, allowed packets go to TX");
  bind_flag("--useless", "useless", "Allow every packet without analysis");
  bind("--cpufreq", "cpufreq", "Clock ticks per microsecond");
  bind_multi("--cost-model", "cost-model", "key=value[,key=value], e.g. enabled=1,epc_mib=96");
  bind("--rate-bps", "rate-bps", "Simulated line rate in bits/s");
  bind("--rate-pps", "rate-pps", "Simulated packet rate, overrides --rate-bps");
  bind("--duration", "duration", "Stop after this many seconds");
  bind("--interval", "interval", "Reporting interval in seconds");
  bind("--alert", "alert", "fast or none");
  bind("--alert-file", "alert-file", "Write fast alerts here instead of stdout");
  bind("--report", "report", "text or csv");
  bind("--out", "out", "Write the report here instead of stdout");
  bind("--tx-pcap", "tx-pcap", "Inline mode: write allowed packets to this pcap");

  // gen-pcap
  std::string gp_synth = "64,256", gp_attack, gp_out, gp_ports;
  std::uint64_t gp_count = 10'000, gp_seed = 1;
  std::optional<unsigned> gp_heartbleed;
  auto* gen_pcap = app.add_subcommand("gen-pcap", "Write a synthetic workload as a pcap file");
  gen_pcap->add_option("--synth", gp_synth, "SIZE,FLOWS");
  gen_pcap->add_option("--count", gp_count, "Frames");
  gen_pcap->add_option("--seed", gp_seed, "Seed");
  gen_pcap->add_option("--attack", gp_attack, "Attack fraction");
  gen_pcap->add_option("--server-ports", gp_ports, "Comma list of server ports");
  gen_pcap->add_option("--heartbleed", gp_heartbleed,
                       "Instead: one TCP session whose server reply is a heartbeat record with this length");
  gen_pcap->add_option("--out", gp_out, "Output pcap")->required();

  // check-rules
  std::string cr_path;
  std::optional<std::size_t> cr_take;
  bool cr_print = false;
  auto* check = app.add_subcommand("check-rules", "Parse a rule file and report rejected lines");
  check->add_option("file", cr_path, "Rule file")->required()->check(CLI::ExistingFile);
  check->add_option("--take-first", cr_take, "Keep only the first N rules");
  check->add_flag("--print", cr_print, "Print the normalised rules");

  // gen-rules
  std::size_t gr_count = 100;
  std::uint64_t gr_seed = 1;
  std::string gr_out;
  auto* gen_rules = app.add_subcommand("gen-rules", "Generate synthetic rules");
  gen_rules->add_option("--count", gr_count, "Rules");
  gen_rules->add_option("--seed", gr_seed, "Seed");
  gen_rules->add_option("--out", gr_out, "Output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (run->parsed()) return cmd_run(settings, bindings, config);
    if (gen_pcap->parsed()) {
      return cmd_gen_pcap(gp_synth, gp_count, gp_seed, gp_attack, gp_ports, gp_heartbleed, gp_out);
    }
    if (check->parsed()) return cmd_check_rules(cr_path, cr_take, cr_print);
    if (gen_rules->parsed()) return cmd_gen_rules(gr_count, gr_seed, gr_out);
  } catch (const splitids::OrderError& e) {
    std::cerr << "lifecycle error: " << e.what() << '\n';
    return kExitLifecycle;
  } catch (const splitids::PcapError& e) {
    std::cerr << "pcap error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRejected;
  }
  return kExitOk;
}
