#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rvqlab {

// Every failure surfaced by the library carries one of these codes. The CLI
// maps them to exit codes and prints the code name first.
enum class ErrorCode {
  kEmptyInput,
  kInvalidConfig,
  kInvalidInput,
  kSampleRateMismatch,
  kInsufficientData,
  kInsufficientDuration,
  kCorruptModel,
  kCorruptTokens,
  kNotABitstream,
  kTruncated,
  kCorruptPadding,
  kExternalToolError,
  kSchemaError,
  kMissingFile,
  kEmptyCategory,
  kNotDivisible,
  kIoError,
};

std::string_view error_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail);

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& detail);

}  // namespace rvqlab
