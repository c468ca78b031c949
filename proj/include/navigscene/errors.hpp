#pragma once

#include <stdexcept>
#include <string>

namespace navigscene {

// Base of every error thrown by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad values or bad requests. CLI maps these to exit code 2.
class ValidationError : public Error {
public:
    using Error::Error;
};

// Failures while touching the filesystem. CLI maps these to exit code 1.
class IoError : public Error {
public:
    using Error::Error;
};

// Malformed input data (JSON/JSONL). Carries a 1-based line number when known.
class ParseError : public Error {
public:
    ParseError(const std::string& what, long line = -1)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
          line_(line) {}
    long line() const noexcept { return line_; }

private:
    long line_;
};

class PoleProximityError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class NonFiniteError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class InvalidDimsError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class NoPathError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class DegenerateRouteError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class BadFrameCountError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class EmptyFramesError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class EmptyAnswerError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class EmptyCandidateSetError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class TokenOutOfRangeError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class EmptySequenceError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class EmptyBatchError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class DimMismatchError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class MissingGuidanceError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

}  // namespace navigscene
