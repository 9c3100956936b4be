#pragma once

#include <stdexcept>
#include <string>

namespace swa {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Unreadable or unwritable stream/file.
struct IoError : Error {
  using Error::Error;
};

/// Input does not look like the configured log format.
struct FormatError : Error {
  using Error::Error;
};

/// Invalid configuration; `field` names the offending setting.
struct ConfigError : Error {
  ConfigError(std::string field_name, const std::string& what)
      : Error(field_name + ": " + what), field(std::move(field_name)) {}
  std::string field;
};

/// Unknown user or artist.
struct LookupError : Error {
  using Error::Error;
};

/// Operation called in a state its contract does not allow.
struct ContractError : Error {
  using Error::Error;
};

} // namespace swa
