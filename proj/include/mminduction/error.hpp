#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace mmi {

// Validation error with a stable machine-readable code. The CLI maps these
// to exit code 2; anything else is an internal error (exit 1).
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(code + ": " + message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

} // namespace mmi
