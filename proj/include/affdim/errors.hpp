#pragma once

#include <stdexcept>
#include <string>

namespace affdim {

/// Malformed or out-of-contract input (bad shapes, singular matrices, s out of range).
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A computation produced a non-finite or degenerate intermediate.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A configured work cap (word count, leaf count) would be exceeded.
class ResourceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace affdim
