#pragma once

#include <stdexcept>
#include <string>

namespace mmae {

enum class ErrorCode {
  Config = 1,
  Shape,
  Contract,
  Format,
  Corruption,
  Validation,
  Metric,
  Io,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void throw_error(ErrorCode code, const std::string& what);

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) throw_error(code, what);
}

}  // namespace mmae
