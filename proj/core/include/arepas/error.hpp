#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace arepas {

enum class ErrorCode {
  kInvalidArgument,
  kShapeMismatch,
  kNoForeground,
  kDegenerateHistogram,
  kNonFiniteLoss,
  kMissingPrerequisite,
  kConfig,
  kManifest,
  kIo,
  kPathCollision,
  kCheckpoint,
  kDevice,
};

// Stable identifier printed by the CLI, e.g. "E_NO_FOREGROUND".
std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace arepas
