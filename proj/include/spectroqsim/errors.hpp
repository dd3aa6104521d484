#pragma once

#include <stdexcept>
#include <string>

namespace spectroqsim {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

/// A domain object violates one of its invariants.
class ValidationError : public Error {
   public:
    using Error::Error;
};

/// The requested Hilbert space exceeds the configured qubit cap.
class ResourceExhausted : public Error {
   public:
    using Error::Error;
};

/// A sweep or post-processing step found missing or inconsistent data.
class DataError : public Error {
   public:
    using Error::Error;
};

/// Configuration file could not be parsed or failed validation.
class ConfigError : public Error {
   public:
    using Error::Error;
};

}  // namespace spectroqsim
