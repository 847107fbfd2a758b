#pragma once

#include <stdexcept>
#include <string>

namespace grushin {

/// Bad input: invalid parameters, malformed configs, inconsistent shapes.
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A computation that cannot deliver the requested accuracy
/// (under-resolved quadrature, aliasing, overflow, non-contraction ...).
class NumericalFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool ok, const std::string& what)
{
    if (!ok) throw InvalidInput(what);
}

} // namespace detail
} // namespace grushin
