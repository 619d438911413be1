#pragma once

#include <stdexcept>
#include <string>

namespace plangan {

struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct ShapeMismatchError : Error {
    explicit ShapeMismatchError(const std::string& what) : Error("shape mismatch: " + what) {}
};

struct LengthMismatchError : Error {
    explicit LengthMismatchError(const std::string& what) : Error("length mismatch: " + what) {}
};

struct EmptyMaskError : Error {
    EmptyMaskError() : Error("mask has no positive pixel") {}
};

struct UnsatisfiableError : Error {
    explicit UnsatisfiableError(int rooms)
        : Error("cannot place " + std::to_string(rooms) + " rooms on the canvas"), rooms(rooms) {}
    int rooms;
};

struct IoError : Error {
    explicit IoError(const std::string& what) : Error("io error: " + what) {}
};

struct ParseError : Error {
    ParseError(int line, const std::string& reason)
        : Error("parse error at line " + std::to_string(line) + ": " + reason), line(line), reason(reason) {}
    int line;
    std::string reason;
};

struct SchemaVersionMismatchError : Error {
    explicit SchemaVersionMismatchError(int got)
        : Error("unsupported dataset schema version " + std::to_string(got)), got(got) {}
    int got;
};

struct NonFiniteLossError : Error {
    explicit NonFiniteLossError(const std::string& diag) : Error("non-finite loss: " + diag) {}
};

struct NoEdgesError : Error {
    NoEdgesError() : Error("diagram has no edges") {}
};

struct NonSymmetricCovarianceError : Error {
    NonSymmetricCovarianceError() : Error("covariance matrix is not symmetric") {}
};

struct UsageError : Error {
    explicit UsageError(const std::string& what) : Error(what) {}
};

}  // namespace plangan
