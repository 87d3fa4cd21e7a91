#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tj {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed expression text. `position()` is the 0-based character offset.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t position)
        : Error(what + " at position " + std::to_string(position)), position_(position) {}

    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

/// Invalid geometry, data or run configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

#define TJ_THROW_IF(cond, Type, msg) \
    do {                             \
        if (cond) throw Type(msg);   \
    } while (0)

}  // namespace tj
