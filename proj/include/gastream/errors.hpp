#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace gastream {

class ArgumentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Malformed bytes: bad magic, truncated arrays, unparseable text.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Well-formed input that violates a data-model invariant. Carries the offending
// element (splat or bone) when one can be named.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what, std::optional<std::size_t> index = std::nullopt)
        : std::runtime_error(what), index_(index)
    {
    }

    std::optional<std::size_t> index() const { return index_; }

private:
    std::optional<std::size_t> index_;
};

} // namespace gastream
