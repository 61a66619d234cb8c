#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace reasonedit {

// Base of every error the engine raises. Subclasses map onto CLI exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ArgumentError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

// Requested image (or other provider resource) does not exist.
class NotFoundError : public Error {
public:
    using Error::Error;
};

// Provider could not be reached or returned a server-side failure. Retryable.
class TransportError : public Error {
public:
    using Error::Error;
};

// Request is outside what the provider manifest advertises.
class ManifestError : public Error {
public:
    using Error::Error;
};

// Provider mode cannot serve this kind of request (e.g. augment in file mode).
class UnsupportedError : public Error {
public:
    using Error::Error;
};

class DegenerateError : public Error {
public:
    using Error::Error;
};

class FormatError : public Error {
public:
    using Error::Error;
};

class CompatibilityError : public Error {
public:
    using Error::Error;
};

class InfeasibleError : public Error {
public:
    using Error::Error;
};

}  // namespace reasonedit
