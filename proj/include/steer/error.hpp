#pragma once

#include <stdexcept>
#include <string>

namespace steer {

/// Base of every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file (bad JSON, missing or mistyped field).
class FormatError : public Error {
public:
    using Error::Error;
};

/// Well-formed input that violates a domain invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Vector or matrix sizes that do not line up.
class DimensionError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Labels that carry no signal: a single class, or a constant target.
class DegenerateLabelsError : public Error {
public:
    using Error::Error;
};

class DivergenceError : public Error {
public:
    using Error::Error;
};

class SingularSystemError : public Error {
public:
    using Error::Error;
};

/// No feature in the dataset had enough labeled samples to fit a direction.
class EmptyFitError : public Error {
public:
    using Error::Error;
};

class InfeasibleError : public Error {
public:
    using Error::Error;
};

/// A feature value that no phrase/modifier combination of the lexicon produces.
class UnrepresentableValueError : public Error {
public:
    using Error::Error;
};

} // namespace steer
