#pragma once

#include <stdexcept>
#include <string>

namespace bliss {

// Base for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid configuration: bad hyperparameters, malformed options, unusable settings.
struct ConfigError : Error {
  using Error::Error;
};

// Invalid input data: unreadable files, malformed rows, mismatched dimensions.
struct DataError : Error {
  using Error::Error;
};

// Numerical failure: degenerate posterior, non-finite intermediate, singular system.
struct NumericError : Error {
  using Error::Error;
};

}  // namespace bliss
