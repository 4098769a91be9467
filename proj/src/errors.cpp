#include "h3nls/errors.hpp"

namespace h3nls {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_parameter: return "invalid parameter";
    case ErrorCode::invalid_argument: return "invalid argument";
    case ErrorCode::numeric_domain: return "numeric domain error";
    case ErrorCode::unsupported_retention: return "unsupported retention";
    case ErrorCode::config: return "configuration error";
    case ErrorCode::io: return "i/o error";
    case ErrorCode::version_mismatch: return "version mismatch";
    case ErrorCode::corrupt: return "corrupt file";
    case ErrorCode::numeric_fatal: return "numeric fatal";
  }
  return "unknown error";
}

void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace h3nls
