#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ronfa {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed file contents. `offset()` is the byte offset (binary) or line number (csv).
class FormatError : public Error {
public:
    FormatError(const std::string& what, std::size_t offset)
        : Error(what), offset_(offset) {}
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Not enough classes / items / pool vectors to build what was asked for.
class CapacityError : public Error {
public:
    using Error::Error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// A task class has no support item under its given label.
class DegenerateClassError : public Error {
public:
    DegenerateClassError(const std::string& what, std::size_t cls)
        : Error(what), cls_(cls) {}
    std::size_t task_class() const noexcept { return cls_; }

private:
    std::size_t cls_;
};

/// A cluster received zero total weight.
class DegenerateClusterError : public Error {
public:
    DegenerateClusterError(const std::string& what, std::size_t cluster)
        : Error(what), cluster_(cluster) {}
    std::size_t cluster() const noexcept { return cluster_; }

private:
    std::size_t cluster_;
};

}  // namespace ronfa
