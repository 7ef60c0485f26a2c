#pragma once

#include <stdexcept>
#include <string>

namespace twix {

// Malformed or inconsistent input data (files, configs, sequences).
class DataError : public std::runtime_error {
public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure: NaN/Inf produced, shape mismatch, non-scalar backward.
class NumericError : public std::runtime_error {
public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace twix
