#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace litmine {

enum class ErrorCode {
  invalid_argument,  // caller supplied bad input
  not_found,         // unknown id, key, or text
  precondition,      // an upstream artifact or state is missing
  unavailable,       // remote dependency failed; retryable
  data_error,        // malformed file or record
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }
  bool retryable() const noexcept { return code_ == ErrorCode::unavailable; }

 private:
  ErrorCode code_;
};

}  // namespace litmine
