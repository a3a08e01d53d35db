#ifndef RINF_ERRORS_HPP
#define RINF_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace rinf {

// Root of the library's error hierarchy. CLI maps ConfigError -> exit 2,
// DataError -> exit 3, anything else -> exit 1.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : Error {
    using Error::Error;
};

struct ShapeError : Error {
    using Error::Error;
};

struct NumericError : Error {
    using Error::Error;
};

struct DataError : Error {
    using Error::Error;
};

struct ParseError : DataError {
    using DataError::DataError;
};

struct SchemaError : DataError {
    using DataError::DataError;
};

struct IntegrityError : DataError {
    using DataError::DataError;
};

struct NotFoundError : DataError {
    using DataError::DataError;
};

struct NoCandidateError : DataError {
    using DataError::DataError;
};

struct EmptyCohortError : DataError {
    using DataError::DataError;
};

struct EmptyGroupError : DataError {
    using DataError::DataError;
};

struct IoError : Error {
    using Error::Error;
};

} // namespace rinf

#endif // RINF_ERRORS_HPP
