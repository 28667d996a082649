// Copyright (c) 2026 sekws authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace sekws {

// Error taxonomy shared with the C API status codes in include/sekws.h.
enum class ErrorKind {
  InvalidArgument = 1,
  Shape = 2,
  Degenerate = 3,
  Io = 4,
  BadData = 5,
  Numeric = 6,
  Config = 7,
  Internal = 8,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) { throw Error(kind, msg); }

inline void require(bool ok, ErrorKind kind, const std::string& msg) {
  if (!ok) fail(kind, msg);
}

}  // namespace sekws
