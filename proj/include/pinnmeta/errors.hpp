#pragma once

#include <stdexcept>
#include <string>

namespace pinnmeta {

// Caller violated a precondition (bad shape, bad arity, bad configuration).
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A computation produced or received a non-finite number.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Finite-difference oracle blew up or could not advance.
class SolverFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Too little data to fit a model.
class DegenerateFitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace pinnmeta
