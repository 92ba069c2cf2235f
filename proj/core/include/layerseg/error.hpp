#pragma once

#include <stdexcept>
#include <string>

namespace layerseg {

// Base class for all errors raised by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Tensor extents do not match what an operation requires.
class ShapeError : public Error {
public:
    explicit ShapeError(const std::string& msg) : Error("shape: " + msg) {}
};

// A value violates an operation's contract (out-of-range label, negative
// thickness, non-finite gradient, ...).
class ValueError : public Error {
public:
    explicit ValueError(const std::string& msg) : Error("value: " + msg) {}
};

// File format or filesystem failure.
class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error("io: " + msg) {}
};

// Bad key/value in a run configuration.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error("config: " + msg) {}
};

}  // namespace layerseg
