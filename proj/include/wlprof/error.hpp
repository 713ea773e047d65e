#pragma once

#include <stdexcept>
#include <string>

namespace wlprof {

// Error families. Values are stable: the C API and the CLI exit codes map
// onto them one-to-one.
enum class ErrorCode : int {
  kOk = 0,
  kInternal = 1,
  kInvalidArgument = 2,
  kIo = 3,
  kZeroValidRows = 4,
  kDuplicateId = 5,
  kSchema = 6,
  kNoViableConfig = 7,
  kEmptyProfileSet = 8,
  kEmptyHoldout = 9,
  kMissingArtifact = 10,
  kFormat = 11,
  kTraining = 12,
  kNumericDomain = 13,
};

const char* error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace wlprof
