#pragma once

#include <stdexcept>
#include <string>

namespace guiaif {

/// Bad or inconsistent run configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Missing or unreadable input files.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A non-finite value reached the parameter update.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace guiaif
