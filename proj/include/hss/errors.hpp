#pragma once

#include <stdexcept>
#include <string>

namespace hss {

/// Invalid scenario, episode or shield parameters.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace hss
