#pragma once

#include <stdexcept>
#include <string>

namespace pplab {

/// Malformed or inconsistent caller input (dimension mismatch, empty set, ...).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The requested (m, n) regime is outside what the operation supports.
class UnsupportedRegime : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Grid, stencil or run-configuration problems.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pplab
