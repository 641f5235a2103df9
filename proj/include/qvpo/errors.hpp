#pragma once

#include <stdexcept>
#include <string>

namespace qvpo {

/// Bad configuration (CLI exit code 1).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Non-finite values or other numeric breakdown (CLI exit code 2).
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

/// File read/write/parse failures (CLI exit code 3).
struct IoError : std::runtime_error {
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace qvpo
