#include "common/error.hpp"

namespace mmae {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Config: return "config error";
    case ErrorCode::Shape: return "shape error";
    case ErrorCode::Contract: return "contract error";
    case ErrorCode::Format: return "format error";
    case ErrorCode::Corruption: return "corruption error";
    case ErrorCode::Validation: return "validation error";
    case ErrorCode::Metric: return "undefined metric";
    case ErrorCode::Io: return "i/o error";
  }
  return "error";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

void throw_error(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace mmae
