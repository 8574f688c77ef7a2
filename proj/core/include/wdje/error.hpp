#pragma once

#include <stdexcept>
#include <string>

namespace wdje {

/// Base class for every exception thrown by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Bad inputs: malformed files, out-of-range parameters, shape mismatches.
class ValidationError : public Error {
  public:
    using Error::Error;
};

/// A computation broke down numerically (NaN scalings, diverging descent).
class NumericalError : public Error {
  public:
    using Error::Error;
};

}  // namespace wdje
