#pragma once

#include <stdexcept>
#include <string>

namespace meshgnn {

enum class ErrorCode {
  InvalidArgument = 1,
  Io = 2,
  Parse = 3,
  Validation = 4,
  Numeric = 5,
  MissingArtifact = 6,
};

// All library failures surface as this exception; the C API maps `code()` onto
// its status enum.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace meshgnn
