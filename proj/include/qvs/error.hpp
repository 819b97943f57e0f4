#pragma once

#include <stdexcept>
#include <string>

namespace qvs {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid arguments or malformed input.
class InputError : public Error {
 public:
  using Error::Error;
};

/// A linear system became numerically singular.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace qvs
