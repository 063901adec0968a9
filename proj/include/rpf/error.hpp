#pragma once

#include <stdexcept>
#include <string>

namespace rpf {

/// Invalid or inconsistent configuration (scenario, agent or session settings).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Network input does not match the expected observation layout.
class InputShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An API was called out of order, e.g. stepping a terminated episode.
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Malformed or incompatible file on disk.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rpf
