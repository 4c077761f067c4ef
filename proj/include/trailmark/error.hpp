#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace trailmark {

// All recoverable failures carry a stable machine-readable code
// (e.g. "SchemaViolation") plus a human message. The CLI surfaces the
// code in its error JSON; tests match on it.
class Error : public std::runtime_error {
public:
    Error(std::string_view code, const std::string& message)
        : std::runtime_error(std::string(code) + ": " + message),
          code_(code),
          message_(message) {}

    const std::string& code() const noexcept { return code_; }
    const std::string& message() const noexcept { return message_; }

private:
    std::string code_;
    std::string message_;
};

[[noreturn]] inline void fail(std::string_view code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace trailmark
