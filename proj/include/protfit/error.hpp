#pragma once

#include <stdexcept>
#include <string>

namespace protfit {

/// Raised for malformed inputs: bad fraction tables, unresolved names, invalid ranges.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

}  // namespace protfit
