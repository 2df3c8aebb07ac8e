#pragma once

#include <functional>
#include <span>
#include <vector>

#include "vfe/numeric.hpp"

namespace vfe::quad
{
/// Gauss-Legendre rule on [-1, 1].
struct Rule
{
    std::vector<Scalar> nodes;
    std::vector<Scalar> weights;
};

/// n-point Gauss-Legendre rule (n >= 1), computed by Newton iteration on P_n.
Rule gauss_legendre(int n);

/// The same rule mapped to [a, b].
Rule gauss_legendre(int n, Scalar a, Scalar b);

struct Result
{
    Scalar value = 0;
    Scalar error = 0;
    int evaluations = 0;
};

struct AdaptiveOptions
{
    Scalar abs_tol = 1e-12;
    Scalar rel_tol = 1e-12;
    int max_depth = 40;
};

/// Adaptive Gauss-Kronrod (7/15) with recursive bisection.
/// Subintervals are visited depth-first left to right, so results are reproducible.
Result integrate(const std::function<Scalar(Scalar)>& f, Scalar a, Scalar b, const AdaptiveOptions& opts = {});

/// Composite trapezoid rule on an arbitrary increasing grid.
Scalar trapezoid(std::span<const Scalar> x, std::span<const Scalar> y);

/// Trapezoid weights w such that sum_k w_k y_k is the trapezoid rule on x.
VecX trapezoid_weights(const VecX& x);

} // namespace vfe::quad
