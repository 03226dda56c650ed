#ifndef QCOUPLE_ERRORS_HPP
#define QCOUPLE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace qcouple {

/// Base class for every error raised by the library.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class domain_error : public error {
public:
    using error::error;
};

/// Operation not defined for the requested distribution family.
class unsupported_error : public error {
public:
    using error::error;
};

/// Root finder called on an interval without a sign change.
class no_bracket_error : public error {
public:
    using error::error;
};

/// Iterative method exhausted its iteration budget.
class convergence_error : public error {
public:
    using error::error;
};

/// A constraint or budget that admits no solution.
class infeasible_error : public error {
public:
    using error::error;
};

/// Malformed scenario input.
class parse_error : public error {
public:
    using error::error;
};

}  // namespace qcouple

#endif
