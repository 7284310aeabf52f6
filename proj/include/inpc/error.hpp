#pragma once

#include <stdexcept>
#include <string>

namespace inpc {

enum class ErrorKind {
  InvalidArgument,
  Numerical,
  Io,
  Usage,
};

/// Exception type raised by every library entry point.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(const std::string& what) { throw Error(ErrorKind::InvalidArgument, what); }
[[noreturn]] inline void fail_numeric(const std::string& what) { throw Error(ErrorKind::Numerical, what); }
[[noreturn]] inline void fail_io(const std::string& what) { throw Error(ErrorKind::Io, what); }

}  // namespace inpc
