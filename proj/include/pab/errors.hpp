#pragma once

#include <stdexcept>
#include <string>

namespace pab {

/// Invalid configuration or input file. CLI exit code 2.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid argument to an in-process operation (bad index, mismatched sizes).
struct InputError : std::invalid_argument {
  explicit InputError(const std::string& msg) : std::invalid_argument(msg) {}
};

/// The simulated protocol produced an impossible observation
/// (agent outside the offered pair, cut emptied the localization set).
/// CLI exit code 3.
struct ProtocolError : std::runtime_error {
  explicit ProtocolError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Internal solver failure that should not occur on valid inputs.
struct InternalError : std::logic_error {
  explicit InternalError(const std::string& msg) : std::logic_error(msg) {}
};

}  // namespace pab
