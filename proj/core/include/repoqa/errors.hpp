// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace repoqa {

/// Base class for all recoverable errors raised by the harness.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct WorkspaceError : Error {
  using Error::Error;
};

struct PathError : Error {
  using Error::Error;
};

struct RangeError : Error {
  using Error::Error;
};

struct GatewayError : Error {
  using Error::Error;
};

struct ProtocolError : Error {
  using Error::Error;
};

struct CalibrationError : Error {
  using Error::Error;
};

struct CorpusError : Error {
  using Error::Error;
};

struct RewardError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

}  // namespace repoqa
