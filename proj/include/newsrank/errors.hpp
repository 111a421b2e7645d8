#pragma once

#include <stdexcept>
#include <string>

namespace newsrank {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Bad configuration value or missing credential. CLI exit code 1.
struct ConfigError : Error {
  using Error::Error;
};

/// Malformed or inconsistent input data. CLI exit code 2.
struct DataError : Error {
  using Error::Error;
};

/// A stage was invoked before the stage that produces its inputs.
struct StageError : Error {
  using Error::Error;
};

/// Completion backend failure after retries. CLI exit code 3.
struct BackendError : Error {
  int http_status;
  explicit BackendError(const std::string& msg, int status = 0)
      : Error(msg), http_status(status) {}
};

}  // namespace newsrank
