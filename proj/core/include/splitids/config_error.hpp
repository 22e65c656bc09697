#pragma once

#include <stdexcept>
#include <string>

namespace splitids {

/// Invalid configuration value. Raised before any packet is processed.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

}  // namespace splitids
