#include "vfe/quadrature.hpp"

#include <array>
#include <cmath>
#include <map>
#include <mutex>
#include <utility>

#include "vfe/errors.hpp"

namespace vfe::quad
{
namespace
{
// Kronrod 15-point abscissae / weights and the embedded Gauss 7-point weights.
constexpr std::array<Scalar, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<Scalar, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<Scalar, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

Result kronrod15(const std::function<Scalar(Scalar)>& f, Scalar a, Scalar b)
{
    const Scalar center = 0.5 * (a + b);
    const Scalar half = 0.5 * (b - a);
    const Scalar fc = f(center);
    Scalar resk = fc * kWgk[7];
    Scalar resg = fc * kWg[3];
    for (int j = 0; j < 7; ++j)
    {
        const Scalar dx = half * kXgk[j];
        const Scalar fsum = f(center - dx) + f(center + dx);
        resk += kWgk[j] * fsum;
        if (j % 2 == 1)
        {
            resg += kWg[j / 2] * fsum;
        }
    }
    return {resk * half, std::abs((resk - resg) * half), 15};
}

Result adapt(const std::function<Scalar(Scalar)>& f, Scalar a, Scalar b, Scalar tol, int depth,
             const AdaptiveOptions& opts)
{
    Result whole = kronrod15(f, a, b);
    if (whole.error <= tol || depth >= opts.max_depth || std::abs(b - a) < 1e-14 * (std::abs(a) + std::abs(b)))
    {
        return whole;
    }
    const Scalar mid = 0.5 * (a + b);
    Result left = adapt(f, a, mid, 0.5 * tol, depth + 1, opts);
    Result right = adapt(f, mid, b, 0.5 * tol, depth + 1, opts);
    return {left.value + right.value, left.error + right.error, whole.evaluations + left.evaluations + right.evaluations};
}

} // namespace

Rule gauss_legendre(int n)
{
    if (n < 1)
    {
        throw ArgumentError("gauss_legendre: n must be >= 1");
    }
    static std::mutex cache_mutex;
    static std::map<int, Rule> cache;
    {
        std::lock_guard lock(cache_mutex);
        if (auto it = cache.find(n); it != cache.end())
        {
            return it->second;
        }
    }

    // P_n(x) and P_n'(x) by the three-term recurrence.
    const auto legendre = [n](Scalar x) {
        Scalar p0 = 1;
        Scalar p1 = x;
        for (int k = 2; k <= n; ++k)
        {
            const Scalar p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        return std::pair{p1, n * (x * p1 - p0) / (x * x - 1)};
    };

    Rule rule;
    rule.nodes.assign(n, 0);
    rule.weights.assign(n, 0);
    if (n == 1)
    {
        rule.weights[0] = 2;
    }
    for (int i = 0; n > 1 && i < (n + 1) / 2; ++i)
    {
        Scalar x = std::cos(pi * (i + 0.75) / (n + 0.5));
        for (int iter = 0; iter < 100; ++iter)
        {
            const auto [p, dp] = legendre(x);
            const Scalar dx = p / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16)
            {
                break;
            }
        }
        const Scalar dp = legendre(x).second;
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        rule.weights[i] = rule.weights[n - 1 - i] = 2 / ((1 - x * x) * dp * dp);
    }

    std::lock_guard lock(cache_mutex);
    cache.emplace(n, rule);
    return rule;
}

Rule gauss_legendre(int n, Scalar a, Scalar b)
{
    Rule rule = gauss_legendre(n);
    const Scalar half = 0.5 * (b - a);
    const Scalar center = 0.5 * (a + b);
    for (std::size_t i = 0; i < rule.nodes.size(); ++i)
    {
        rule.nodes[i] = center + half * rule.nodes[i];
        rule.weights[i] *= half;
    }
    return rule;
}

Result integrate(const std::function<Scalar(Scalar)>& f, Scalar a, Scalar b, const AdaptiveOptions& opts)
{
    if (a == b)
    {
        return {};
    }
    // A first coarse pass sets the scale for the relative tolerance.
    const Result coarse = kronrod15(f, a, b);
    const Scalar tol = std::max(opts.abs_tol, opts.rel_tol * std::abs(coarse.value));
    return adapt(f, a, b, tol, 0, opts);
}

Scalar trapezoid(std::span<const Scalar> x, std::span<const Scalar> y)
{
    if (x.size() != y.size())
    {
        throw ArgumentError("trapezoid: size mismatch");
    }
    Scalar sum = 0;
    for (std::size_t k = 0; k + 1 < x.size(); ++k)
    {
        sum += 0.5 * (x[k + 1] - x[k]) * (y[k] + y[k + 1]);
    }
    return sum;
}

VecX trapezoid_weights(const VecX& x)
{
    VecX w = VecX::Zero(x.size());
    for (Eigen::Index k = 0; k + 1 < x.size(); ++k)
    {
        const Scalar h = x[k + 1] - x[k];
        w[k] += 0.5 * h;
        w[k + 1] += 0.5 * h;
    }
    return w;
}

} // namespace vfe::quad
