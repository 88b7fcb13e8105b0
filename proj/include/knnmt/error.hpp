#pragma once

#include <stdexcept>
#include <string>

namespace knnmt {

enum class ErrorCode {
    invalid_argument,
    invalid_state,
    store_sealed,
    capacity_exceeded,
    format_error,
    empty_neighborhood,
    singular_system,
    data_error,
};

class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
    ErrorCode code() const noexcept { return code_; }

  private:
    ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& msg) {
    throw Error(code, msg);
}

#define KNNMT_REQUIRE(cond, code, msg)                                                             \
    do {                                                                                           \
        if (!(cond)) ::knnmt::raise(::knnmt::ErrorCode::code, (msg));                              \
    } while (0)

} // namespace knnmt
