#pragma once

#include <stdexcept>
#include <string>

namespace cobras {

enum class ErrorCode {
  InvalidArgument,
  Io,
  Parse,
  State,
  OracleViolation,
  Internal,
};

// Every failure raised by the core carries one of these codes; the C API maps
// them one-to-one onto cobras_status values.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace cobras
