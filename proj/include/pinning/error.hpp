#pragma once

#include <stdexcept>
#include <string>

namespace pinning {

enum class ErrorCode {
  InvalidArgument,
  Divergent,
  BudgetExceeded,
  Infeasible,
  Unsupported,
  Io,
  Config,
};

const char* to_string(ErrorCode code) noexcept;

// All library failures are reported through this exception type; the C API
// maps `code()` onto its status enum.
class PinningError : public std::runtime_error {
 public:
  PinningError(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw PinningError(code, what);
}

inline void require(bool cond, const std::string& what) {
  if (!cond) fail(ErrorCode::InvalidArgument, what);
}

}  // namespace pinning
