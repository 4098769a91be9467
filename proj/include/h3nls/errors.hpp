#pragma once

#include <stdexcept>
#include <string>

namespace h3nls {

enum class ErrorCode {
  invalid_parameter = 1,
  invalid_argument,
  numeric_domain,
  unsupported_retention,
  config,
  io,
  version_mismatch,
  corrupt,
  numeric_fatal,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace h3nls
