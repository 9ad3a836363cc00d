#pragma once

#include <stdexcept>
#include <string>

namespace toolcal {

// Base for every error the library raises on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad argument or precondition violation (arity, range, unknown position).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

// Bad or incomplete configuration; raised before any model call.
class ConfigError : public Error {
public:
    using Error::Error;
};

class DatasetError : public Error {
public:
    DatasetError(std::size_t row, std::string field, const std::string& what)
        : Error("row " + std::to_string(row) + ", field '" + field + "': " + what),
          row_(row), field_(std::move(field)) {}

    std::size_t row() const noexcept { return row_; }
    const std::string& field() const noexcept { return field_; }

private:
    std::size_t row_;
    std::string field_;
};

// Schema or version mismatch on a persisted artifact.
class SchemaError : public Error {
public:
    using Error::Error;
};

class BackendError : public Error {
public:
    using Error::Error;
};

class ReplayMiss : public BackendError {
public:
    explicit ReplayMiss(std::string key)
        : BackendError("replay miss: no cached response for request " + key),
          key_(std::move(key)) {}

    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

class HttpError : public BackendError {
public:
    HttpError(int status, const std::string& what)
        : BackendError("HTTP " + std::to_string(status) + ": " + what), status_(status) {}

    int status() const noexcept { return status_; }

private:
    int status_;
};

} // namespace toolcal
