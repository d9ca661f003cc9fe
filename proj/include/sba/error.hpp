#pragma once

#include <stdexcept>
#include <string>

namespace sba {

/// Invalid configuration or command-line usage. Maps to exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed, missing or contract-violating input data. Maps to exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite values or a numerical procedure that cannot produce a result.
/// Maps to exit code 3.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sba
