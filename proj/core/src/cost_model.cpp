#include "splitids/cost_model.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace splitids {

namespace {

constexpr double kFullRulesetBytes = 28.0 * static_cast<double>(kMiB);
constexpr double kFullRulesetCount = 3462.0;

double parse_double(std::string_view key, std::string_view value) {
  try {
    std::size_t used = 0;
    const std::string text(value);
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("bad numeric value for " + std::string(key) + ": " +
                                std::string(value));
  }
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "1" || value == "true" || value == "on" || value == "yes") return true;
  if (value == "0" || value == "false" || value == "off" || value == "no") return false;
  throw std::invalid_argument("bad boolean value for " + std::string(key) + ": " +
                              std::string(value));
}

}  // namespace

double CostModel::warmup_seconds() const {
  if (warmup_bytes == 0 || warmup_rate <= 0.0) return 0.0;
  return static_cast<double>(warmup_bytes) / warmup_rate;
}

void CostModel::set_warmup_seconds(double seconds) {
  if (!(seconds >= 0.0) || !std::isfinite(seconds)) {
    throw std::invalid_argument("warmup_seconds must be >= 0");
  }
  if (seconds == 0.0) {
    warmup_rate = 0.0;
    return;
  }
  if (warmup_bytes == 0) warmup_bytes = 64 * kMiB;
  warmup_rate = static_cast<double>(warmup_bytes) / seconds;
}

void CostModel::validate() const {
  auto check = [](double v, const char* name) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument(std::string("cost model coefficient must be >= 0: ") + name);
    }
  };
  check(crossing_cost_us, "crossing_cost_us");
  check(paging_penalty, "paging_penalty");
  check(warmup_rate, "warmup_rate");
  check(warmup_slowdown, "warmup_slowdown");
  if (epc_bytes == 0) throw std::invalid_argument("epc size must be positive");
}

double paging_factor(const CostModel& model, std::size_t footprint) {
  if (!model.enabled || footprint <= model.epc_bytes) return 1.0;
  const double over = static_cast<double>(footprint - model.epc_bytes);
  return 1.0 + model.paging_penalty * over / static_cast<double>(model.epc_bytes);
}

double warmup_factor(const CostModel& model, double elapsed_s) {
  if (!model.enabled || model.warmup_slowdown <= 1.0) return 1.0;
  return elapsed_s < model.warmup_seconds() ? model.warmup_slowdown : 1.0;
}

std::size_t ruleset_footprint_bytes(std::size_t n_rules) {
  return static_cast<std::size_t>(static_cast<double>(n_rules) * kFullRulesetBytes /
                                  kFullRulesetCount);
}

std::size_t trusted_footprint_bytes(const CostModel& model, std::size_t flow_bytes,
                                    std::size_t n_rules) {
  return model.base_footprint_bytes + flow_bytes + ruleset_footprint_bytes(n_rules);
}

void apply_cost_model_setting(CostModel& model, std::string_view key, std::string_view value) {
  if (key.starts_with("cost_model.")) key.remove_prefix(11);
  if (key == "enabled") {
    model.enabled = parse_bool(key, value);
  } else if (key == "epc_mib") {
    const double mib = parse_double(key, value);
    if (!(mib > 0.0)) throw std::invalid_argument("epc_mib must be positive");
    model.epc_bytes = static_cast<std::size_t>(mib * static_cast<double>(kMiB));
  } else if (key == "paging_penalty") {
    model.paging_penalty = parse_double(key, value);
  } else if (key == "warmup_seconds") {
    model.set_warmup_seconds(parse_double(key, value));
  } else if (key == "warmup_slowdown") {
    model.warmup_slowdown = parse_double(key, value);
  } else if (key == "crossing_cost_us") {
    model.crossing_cost_us = parse_double(key, value);
  } else if (key == "base_mib") {
    model.base_footprint_bytes =
        static_cast<std::size_t>(parse_double(key, value) * static_cast<double>(kMiB));
  } else {
    throw std::invalid_argument("unknown cost model key: " + std::string(key));
  }
  model.validate();
}

std::string describe(const CostModel& m) {
  std::ostringstream os;
  os << "enabled=" << (m.enabled ? "true" : "false")
     << " epc_mib=" << static_cast<double>(m.epc_bytes) / static_cast<double>(kMiB)
     << " paging_penalty=" << m.paging_penalty << " warmup_seconds=" << m.warmup_seconds()
     << " warmup_slowdown=" << m.warmup_slowdown << " crossing_cost_us=" << m.crossing_cost_us
     << " base_mib=" << static_cast<double>(m.base_footprint_bytes) / static_cast<double>(kMiB);
  return os.str();
}

}  // namespace splitids
