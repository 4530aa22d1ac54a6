#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace scalestore {

// Root of every error the library raises. Callers that only need to report
// a failure can catch this; the CLI maps subclasses onto exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SyntaxError : public Error {
public:
    SyntaxError(std::size_t position, const std::string& message)
        : Error("syntax error at " + std::to_string(position) + ": " + message),
          position_(position) {}

    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class UnknownMergeFunction : public Error {
public:
    explicit UnknownMergeFunction(const std::string& name)
        : Error("unknown merge function '" + name + "'"), name_(name) {}

    const std::string& name() const noexcept { return name_; }

private:
    std::string name_;
};

class UnknownTable : public Error {
public:
    explicit UnknownTable(const std::string& name) : Error("unknown table '" + name + "'") {}
};

class UnknownField : public Error {
public:
    explicit UnknownField(const std::string& name) : Error("unknown field '" + name + "'") {}
};

class UnboundParameter : public Error {
public:
    using Error::Error;
};

class MissingParameter : public Error {
public:
    explicit MissingParameter(const std::string& name)
        : Error("missing parameter '" + name + "'") {}
};

class TypeMismatch : public Error {
public:
    using Error::Error;
};

class ReplicaUnavailable : public Error {
public:
    using Error::Error;
};

class RangeTooWide : public Error {
public:
    using Error::Error;
};

class InvalidSplitKey : public Error {
public:
    using Error::Error;
};

class NonAdjacent : public Error {
public:
    using Error::Error;
};

// Raised when a maintenance function performs more primitive operations than
// its rule allows. Indicates a compiler bug, never a workload condition.
class BudgetExceeded : public Error {
public:
    using Error::Error;
};

class InsufficientData : public Error {
public:
    using Error::Error;
};

class ScenarioError : public Error {
public:
    using Error::Error;
};

class SchemaMismatch : public Error {
public:
    using Error::Error;
};

// A run broke one of its own invariants (deadline order, unflagged stale
// data). Always a bug.
class InvariantViolation : public Error {
public:
    using Error::Error;
};

}  // namespace scalestore
