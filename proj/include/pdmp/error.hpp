#pragma once

#include <stdexcept>
#include <string>

namespace pdmp {

enum class ErrorCode {
  InvalidArgument = 2,
  Config = 3,
  Domain = 4,
  Numeric = 5,
  Tolerance = 6,
  Internal = 7,
  Io = 8,
};

class PdmpError : public std::runtime_error {
 public:
  PdmpError(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw PdmpError(code, what);
}

}  // namespace pdmp
