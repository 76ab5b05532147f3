#include "rvqlab/error.h"

namespace rvqlab {

std::string_view error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kInvalidInput: return "InvalidInput";
    case ErrorCode::kSampleRateMismatch: return "SampleRateMismatch";
    case ErrorCode::kInsufficientData: return "InsufficientData";
    case ErrorCode::kInsufficientDuration: return "InsufficientDuration";
    case ErrorCode::kCorruptModel: return "CorruptModel";
    case ErrorCode::kCorruptTokens: return "CorruptTokens";
    case ErrorCode::kNotABitstream: return "NotABitstream";
    case ErrorCode::kTruncated: return "Truncated";
    case ErrorCode::kCorruptPadding: return "CorruptPadding";
    case ErrorCode::kExternalToolError: return "ExternalToolError";
    case ErrorCode::kSchemaError: return "SchemaError";
    case ErrorCode::kMissingFile: return "MissingFile";
    case ErrorCode::kEmptyCategory: return "EmptyCategory";
    case ErrorCode::kNotDivisible: return "NotDivisible";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& detail)
    : std::runtime_error(std::string(error_name(code)) + ": " + detail),
      code_(code),
      detail_(detail) {}

void fail(ErrorCode code, const std::string& detail) { throw Error(code, detail); }

}  // namespace rvqlab
