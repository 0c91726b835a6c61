#pragma once

#include <stdexcept>
#include <string>

namespace mdlab {

/// Malformed arguments: dimension mismatches, non-finite data, empty samples.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A finite-difference stencil would leave the open domain.
class ClearanceError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A stated hypothesis of a check (e.g. f1 == f2 on a set) does not hold.
class PremiseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unknown scenario or suite, unreadable or ill-typed configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mdlab
