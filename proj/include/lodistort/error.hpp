// Copyright 2026 The lodistort Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <stdexcept>
#include <string>

namespace lodistort {

// Base of every error thrown by the library. The CLI maps the three
// subclasses onto distinct exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Contract violations: bad shapes, bad parameters, unknown names.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Missing files, malformed headers, unsupported encodings.
class IoError : public Error {
 public:
  using Error::Error;
};

// Singular systems that survive diagonal loading.
class NumericalError : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline void require(bool cond, const std::string& what) {
  if (!cond) throw InvalidArgument(what);
}

}  // namespace detail
}  // namespace lodistort
