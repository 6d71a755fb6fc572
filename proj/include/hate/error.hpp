#pragma once

#include <stdexcept>
#include <string>

namespace hate {

// Every error the library raises derives from Error; the subclass decides the
// CLI exit status.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input data, bad flags, unreadable or malformed files.
class InputError : public Error {
 public:
  using Error::Error;
};

// Artifacts that do not fit together: version, vocabulary, or shape mismatch.
class CompatibilityError : public Error {
 public:
  using Error::Error;
};

// Non-finite loss or gradient during training.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace hate
