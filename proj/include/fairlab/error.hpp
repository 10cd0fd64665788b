#pragma once

#include <stdexcept>
#include <string>

namespace fairlab {

enum class ErrorCode {
  Input = 1,
  Unsupported,
  InsufficientData,
  Degenerate,
  CalibrationDegenerate,
  TrainingDegenerate,
  Unclassifiable,
  Validation,
  NotFound,
  Io,
  State,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace fairlab
