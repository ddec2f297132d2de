#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace memvqa {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// dataset
class FileLayoutError : public Error {
public:
    using Error::Error;
};

/// A record that could not be parsed. Carries the offending file and 1-based line.
class RecordError : public Error {
public:
    RecordError(std::string file, std::size_t line, const std::string& what)
        : Error(file + ":" + std::to_string(line) + ": " + what), file_(std::move(file)), line_(line) {}

    const std::string& file() const noexcept { return file_; }
    std::size_t line() const noexcept { return line_; }

private:
    std::string file_;
    std::size_t line_;
};

class LabelError : public Error {
public:
    using Error::Error;
};

// annotation / retrieval / prompting
class AnnotationError : public Error {
public:
    using Error::Error;
};

class FitError : public Error {
public:
    using Error::Error;
};

class RenderError : public Error {
public:
    using Error::Error;
};

// backend
/// Transient failure (transport error, timeout, 5xx). Callers may retry.
class RetryableError : public Error {
public:
    using Error::Error;
};

/// Terminal failure of a backend call after retries were exhausted.
class RunError : public Error {
public:
    using Error::Error;
};

/// Misconfiguration: bad endpoint, HTTP 4xx, invalid option values.
class ConfigError : public Error {
public:
    using Error::Error;
};

class MockMissError : public Error {
public:
    using Error::Error;
};

// metrics / exporter
class EvalError : public Error {
public:
    using Error::Error;
};

class ExportError : public Error {
public:
    using Error::Error;
};

}  // namespace memvqa
