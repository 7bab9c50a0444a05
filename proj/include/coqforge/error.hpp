#pragma once

#include <stdexcept>
#include <string>

namespace coqforge {

/// Base for every error the toolkit throws. The CLI maps subclasses onto
/// exit codes (see cli.hpp).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unreadable/unwritable files, partial writes.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Bad configuration: unknown format tags, invalid rule files, missing
/// API key, malformed templates.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A caller broke a documented precondition.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

}  // namespace coqforge
