#ifndef COVERTREE_ERRORS_HPP
#define COVERTREE_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace covertree {

/// Base class for every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller-supplied argument is out of range (k, epsilon, delta schedule, ...).
class ParameterError : public Error {
public:
    using Error::Error;
};

/// A point id does not exist in the dataset or tree.
class IndexError : public Error {
public:
    using Error::Error;
};

/// Two points are at distance zero (or below the supported resolution).
class DuplicatePointError : public Error {
public:
    using Error::Error;
};

/// Too few points for the requested quantity.
class DegenerateInputError : public Error {
public:
    using Error::Error;
};

/// Operation needs explicit coordinates or a built-in norm.
class UnsupportedMetricError : public Error {
public:
    using Error::Error;
};

/// An internal invariant was broken; indicates a bug, not bad input.
class InvariantError : public Error {
public:
    using Error::Error;
};

/// Input files that cannot be read or parsed.
class IoError : public Error {
public:
    using Error::Error;
};

class ParseError : public IoError {
public:
    ParseError(const std::string& what, std::size_t row)
        : IoError("row " + std::to_string(row) + ": " + what), detail_(what), row_(row) {}

    std::size_t row() const { return row_; }
    /// Message without the row prefix.
    const std::string& detail() const { return detail_; }

private:
    std::string detail_;
    std::size_t row_;
};

/// Tree and point file disagree (node count, ids).
class ConsistencyError : public Error {
public:
    using Error::Error;
};

} // namespace covertree

#endif
