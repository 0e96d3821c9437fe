#pragma once

#include <stdexcept>
#include <string>

namespace apgm {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid configuration: illegal codec parameter, bad corpus geometry, ...
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Requested operation is not supported in this mode (e.g. PNG on a full message).
class UnsupportedError : public Error {
public:
    using Error::Error;
};

/// A byte stream failed structural or checksum validation.
class IntegrityError : public Error {
public:
    using Error::Error;
};

/// Unknown magic or version in a wire message.
class FormatError : public Error {
public:
    using Error::Error;
};

/// Decoded content violates a domain invariant.
class DataError : public Error {
public:
    using Error::Error;
};

/// Filesystem or socket failure, annotated with the offending path/endpoint.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace apgm
