#pragma once

#include <stdexcept>
#include <string>

namespace gchan {

// Argument outside the mathematical domain of an operation (negative SNR,
// time outside [0, T], mismatched shapes).
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

// A numerical routine could not deliver its contract (non-convergence,
// pivot failure, overflow, quadrature budget).
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// Invalid user configuration; maps to CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace gchan
