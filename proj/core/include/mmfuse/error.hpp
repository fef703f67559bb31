#pragma once

#include <stdexcept>
#include <string>

namespace mmfuse {

// Domain failure: malformed input, violated precondition, numerical breakdown.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A file could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace mmfuse
