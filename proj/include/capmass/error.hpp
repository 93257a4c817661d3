#pragma once

#include <stdexcept>
#include <string>

namespace capmass {

enum class ErrorCode {
  InvalidArgument = 1,
  Domain,          // point or region outside the metric's domain
  Unsupported,     // operation not defined for this model/region combination
  NotConverged,    // iterative method or extrapolation failed its tolerance
  Config,          // scenario parse / validation failure
  Io,
  Internal,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool ok, const std::string& what) {
  if (!ok) fail(ErrorCode::InvalidArgument, what);
}

}  // namespace capmass
