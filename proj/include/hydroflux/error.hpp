#pragma once

#include <stdexcept>
#include <string>

namespace hydroflux {

// Every failure raised by the library carries a stable machine-readable code
// (e.g. "GapInCalendar") next to the human-readable message. The CLI forwards
// the code verbatim into its error JSON.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

[[noreturn]] inline void fail(std::string code, const std::string& message) {
    throw Error(std::move(code), message);
}

}  // namespace hydroflux
