#pragma once

#include <stdexcept>
#include <string>

namespace vfe
{
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Input outside the domain where an operation is defined.
class DomainError : public Error
{
public:
    using Error::Error;
};

/// Malformed or inconsistent arguments (mismatched grids, missing table entries).
class ArgumentError : public Error
{
public:
    using Error::Error;
};

/// Evaluation point on a singular set (e.g. a point on a Biot-Savart source curve).
class SingularityError : public Error
{
public:
    using Error::Error;
};

/// Iterative solver or quadrature failed to reach its tolerance.
class ConvergenceError : public Error
{
public:
    using Error::Error;
};

/// Internal invariant violated (non-SPD Gram matrix and similar).
class ConsistencyError : public Error
{
public:
    using Error::Error;
};

/// Two filaments coincide at a node: the logarithmic interaction is infinite.
class InfiniteEnergyError : public DomainError
{
public:
    InfiniteEnergyError(int i, int j, int node)
        : DomainError("infinite energy: curves " + std::to_string(i) + " and " + std::to_string(j) +
                      " coincide at node " + std::to_string(node)),
          first(i), second(j), node(node)
    {
    }

    int first;
    int second;
    int node;
};

/// Rejected configuration file or flag.
class ValidationError : public Error
{
public:
    using Error::Error;
};

} // namespace vfe
