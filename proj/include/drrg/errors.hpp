#pragma once
#include <cstddef>
#include <stdexcept>
#include <string>

namespace drrg {

// Raised when a protocol step would break the round model (duplicate call
// initiation, oversized payload, malformed forest handed to a phase).
class ModelViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// Misuse of a stateful API, e.g. opening a round while another is open.
class UsageError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class InputFormatError : public std::runtime_error {
public:
    InputFormatError(const std::string& what, std::size_t line)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class ConstructionFailure : public std::runtime_error {
public:
    ConstructionFailure(const std::string& what, std::size_t retries)
        : std::runtime_error(what + " after " + std::to_string(retries) + " retries"),
          retries_(retries) {}
    std::size_t retries() const noexcept { return retries_; }

private:
    std::size_t retries_;
};

}  // namespace drrg
