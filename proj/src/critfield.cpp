#include "vfe/critfield.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "vfe/errors.hpp"

namespace vfe
{
namespace
{
Scalar abs_log(Scalar eps)
{
    if (!(eps > 0 && eps < 1))
    {
        throw DomainError("eps must lie in (0, 1), got " + std::to_string(eps));
    }
    return -std::log(eps);
}

void require_count(int N, const char* what)
{
    if (N < 0)
    {
        throw ArgumentError(std::string(what) + ": N must be non-negative");
    }
}

// d/dh of g_eps(N).
Scalar g_eps_slope(int N, Scalar h, const ModelConstants& c)
{
    return 2 * h * c.J0 - 2 * pi * N * c.L0 * c.R0 + pi * c.L0 * N * (N - 1) / (2 * h);
}
} // namespace

void ModelConstants::validate(int N) const
{
    if (!(R0 > 0) || !(L0 > 0))
    {
        throw ArgumentError("model constants: R0 and L0 must be positive");
    }
    if (minW.empty() || minW[0] != 0)
    {
        throw ArgumentError("model constants: minW[0] must be 0");
    }
    if (N >= static_cast<int>(minW.size()))
    {
        throw ArgumentError("model constants: no min W entry for N = " + std::to_string(N));
    }
}

Scalar k_N(int N, const ModelConstants& c)
{
    if (N < 1)
    {
        throw ArgumentError("k_N: N must be at least 1");
    }
    c.validate(N);
    const Scalar n = N;
    // (N^2 - 3N + 2) / 2 vanishes at N = 1, which takes care of 0 log 0.
    const Scalar quadratic = N == 1 ? 0.0 : 0.5 * (n * n - 3 * n + 2) * std::log((n - 1) / n);
    return (n - 1) * std::log(1 / n) + quadratic +
           (c.minW[N] - c.minW[N - 1] + c.gamma * c.L0 + (2 * n - 1) * c.C_Omega) / (pi * c.L0);
}

Scalar H_N(int N, Scalar eps, const ModelConstants& c)
{
    const Scalar l = abs_log(eps);
    const Scalar k = k_N(N, c);
    const Scalar loglog = N == 1 ? 0.0 : (N - 1) * std::log(l / (2 * c.R0));
    return (l + loglog + k) / (2 * c.R0);
}

Scalar hc1_expansion(Scalar eps, const ModelConstants& c)
{
    c.validate(0);
    return (abs_log(eps) + (c.gamma * c.L0 + c.C_Omega) / (pi * c.L0)) / (2 * c.R0);
}

EnergyBreakdown energy_expansion(int N, Scalar h_ex, Scalar eps, const ModelConstants& c)
{
    require_count(N, "energy_expansion");
    c.validate(N);
    if (!(h_ex > 0))
    {
        throw DomainError("energy_expansion: h_ex must be positive");
    }
    const Scalar l = abs_log(eps);
    const Scalar n = N;
    EnergyBreakdown e;
    e.K = (h_ex - l / (2 * c.R0)) / std::log(l);
    e.meissner = h_ex * h_ex * c.J0;
    if (N > 1)
    {
        e.log_field = 0.5 * pi * c.L0 * n * (n - 1) * std::log(h_ex);
        e.log_count = -0.5 * pi * c.L0 * n * (n - 1) * std::log(n);
    }
    e.log_log = -2 * pi * e.K * c.R0 * c.L0 * n * std::log(l);
    e.renormalized = c.minW[N];
    e.core = c.gamma * n * c.L0;
    e.self_interaction = n * n * c.C_Omega;
    e.total = e.meissner + e.log_field + e.log_log + e.log_count + e.renormalized + e.core + e.self_interaction;
    return e;
}

Scalar g_eps(int N, Scalar h_ex, Scalar eps, const ModelConstants& c)
{
    require_count(N, "g_eps");
    c.validate(N);
    if (!(h_ex > 0))
    {
        throw DomainError("g_eps: h_ex must be positive");
    }
    const Scalar n = N;
    const Scalar f = h_ex * h_ex * c.J0 + pi * c.L0 * n * abs_log(eps) - 2 * pi * n * c.L0 * c.R0 * h_ex +
                     (N > 1 ? pi * c.L0 * n * (n - 1) * std::log(std::sqrt(h_ex / n)) : 0.0) + n * n * c.C_Omega;
    return f + c.minW[N] + c.gamma * c.L0 * n;
}

int optimal_N(Scalar h_ex, Scalar eps, const ModelConstants& c, int N_max)
{
    if (N_max < 1)
    {
        throw ArgumentError("optimal_N: N_max must be at least 1");
    }
    int best = 0;
    Scalar best_value = g_eps(0, h_ex, eps, c);
    for (int N = 1; N <= N_max; ++N)
    {
        const Scalar value = g_eps(N, h_ex, eps, c);
        if (value < best_value)
        {
            best = N;
            best_value = value;
        }
    }
    return best;
}

Scalar break_even_field(int N, Scalar eps, const ModelConstants& c)
{
    if (N < 1)
    {
        throw ArgumentError("break_even_field: N must be at least 1");
    }
    c.validate(N);
    const auto difference = [&](Scalar h) { return g_eps(N, h, eps, c) - g_eps(N - 1, h, eps, c); };
    const auto slope = [&](Scalar h) { return g_eps_slope(N, h, c) - g_eps_slope(N - 1, h, c); };

    // The difference is concave in h with its maximum at (N - 1) / (2 R0).
    Scalar lo = N == 1 ? 1e-300 : (N - 1) / (2 * c.R0);
    if (!(difference(lo) > 0))
    {
        throw DomainError("break_even_field: g_eps(N) <= g_eps(N - 1) at every field for N = " +
                          std::to_string(N));
    }
    Scalar hi = std::max(2 * lo, H_N(N, eps, c));
    while (difference(hi) > 0)
    {
        lo = hi;
        hi *= 2;
    }
    Scalar h = H_N(N, eps, c);
    if (!(h > lo && h < hi))
    {
        h = 0.5 * (lo + hi);
    }
    for (int iter = 0; iter < 200; ++iter)
    {
        const Scalar d = difference(h);
        if (d > 0)
        {
            lo = h;
        }
        else
        {
            hi = h;
        }
        Scalar next = h - d / slope(h);
        if (!(next > lo && next < hi))
        {
            next = 0.5 * (lo + hi);
        }
        if (std::abs(next - h) <= 1e-15 * std::abs(h))
        {
            return next;
        }
        h = next;
    }
    throw ConvergenceError("break_even_field: Newton did not converge");
}

CriticalFieldTable critical_field_table(Scalar eps, const ModelConstants& c, int N_max)
{
    if (N_max < 1)
    {
        throw ArgumentError("critical_field_table: N_max must be at least 1");
    }
    c.validate(N_max);
    abs_log(eps);
    CriticalFieldTable table{eps, {}, true};
    for (int N = 1; N <= N_max; ++N)
    {
        CriticalFieldRow row{N, k_N(N, c), H_N(N, eps, c), 0};
        row.g_eps_N = g_eps(N, row.H_N, eps, c);
        if (!table.rows.empty() && !(row.H_N > table.rows.back().H_N))
        {
            table.increasing = false;
        }
        table.rows.push_back(row);
    }
    return table;
}
} // namespace vfe
