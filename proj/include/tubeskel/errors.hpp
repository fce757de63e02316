#pragma once

#include <stdexcept>
#include <string>

namespace tubeskel {

/// Malformed input: unparsable files, topology violations, bad configuration.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A geometric computation could not be completed robustly.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tubeskel
