#pragma once

#include <stdexcept>
#include <string>

namespace katodyn {

// Base for everything the library throws on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad arguments: negative radii, t outside the supported window, wrong model.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// A numerical method did not reach its tolerance.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

// A checked precondition of a verification failed (kernel bound, Khashminski, ...).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

inline void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidArgument(what);
}

}  // namespace katodyn
