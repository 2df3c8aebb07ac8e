#pragma once

#include <type_traits>

#include "vfe/numeric.hpp"

namespace vfe::fd
{
// Fourth-order central stencils. T may be a scalar or any fixed-size Eigen type.

// Results are materialized as the callback's value type, never left as Eigen expressions.
template <typename F>
using value_t = std::decay_t<std::invoke_result_t<const F&, Scalar>>;

template <typename F>
value_t<F> derivative(const F& f, Scalar h)
{
    const value_t<F> a = f(-2 * h), b = f(-h), c = f(h), d = f(2 * h);
    return value_t<F>((a - 8 * b + 8 * c - d) / (12 * h));
}

template <typename F>
value_t<F> second_derivative(const F& f, Scalar h)
{
    const value_t<F> a = f(-2 * h), b = f(-h), m = f(0.0), c = f(h), d = f(2 * h);
    return value_t<F>((-a + 16 * b - 30 * m + 16 * c - d) / (12 * h * h));
}

/// Directional derivative of g at u along direction v.
template <typename G>
auto directional(const G& g, const Vec2& u, const Vec2& v, Scalar h)
{
    return derivative([&](Scalar t) { return g(Vec2(u + t * v)); }, h);
}

/// Mixed derivative d^2 g / (da db) at u by Richardson-extrapolated 4-point stencils.
template <typename G>
auto mixed(const G& g, const Vec2& u, const Vec2& a, const Vec2& b, Scalar h)
{
    using T = std::decay_t<decltype(g(u))>;
    const auto stencil = [&](Scalar k) -> T {
        return (g(Vec2(u + k * a + k * b)) - g(Vec2(u + k * a - k * b)) - g(Vec2(u - k * a + k * b)) +
                g(Vec2(u - k * a - k * b))) /
               (4 * k * k);
    };
    const T fine = stencil(h), coarse = stencil(2 * h);
    return T((4 * fine - coarse) / 3);
}

} // namespace vfe::fd
