#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace privloc {

// Mirrors the status codes of the C API (privloc.h).
enum class ErrorCode : int {
  invalid_argument = 1,
  config = 2,
  distance_violation = 3,
  not_found = 4,
  io = 5,
  protocol = 6,
  unavailable = 7,
  internal = 8,
  unauthorized = 9,
};

const char* error_code_name(ErrorCode code) noexcept;
// Unknown names map to internal.
ErrorCode parse_error_code(std::string_view name) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace privloc
