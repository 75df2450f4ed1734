#pragma once

#include <stdexcept>
#include <string>

namespace sensy {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Unreadable or syntactically invalid input file.
class ParseError : public Error {
public:
    using Error::Error;
};

// A domain invariant was violated (bad label, duplicate id, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

// Bad runtime configuration (invalid regex, mismatched dimensions, ...).
class ConfigError : public Error {
public:
    using Error::Error;
};

// Network-level failure that survived the retry budget.
class TransportError : public Error {
public:
    using Error::Error;
};

// A provider returned a vector whose length differs from its declared dimension.
class DimensionMismatchError : public Error {
public:
    using Error::Error;
};

// Model file errors are distinct so callers can react to each.
class ModelFormatError : public Error {
public:
    using Error::Error;
};

class ModelVersionError : public Error {
public:
    using Error::Error;
};

class ModelTruncatedError : public Error {
public:
    using Error::Error;
};

class ModelChecksumError : public Error {
public:
    using Error::Error;
};

} // namespace sensy
