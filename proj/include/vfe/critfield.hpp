#pragma once

#include <vector>

#include "vfe/numeric.hpp"

namespace vfe
{
/// Constants entering the critical fields and the energy expansion.
struct ModelConstants
{
    Scalar R0 = 0.5;
    Scalar L0 = 1;
    Scalar C_Omega = 0;
    Scalar gamma = 0;
    /// Meissner coefficient; with the default 0 energies are excesses over h_ex^2 J0.
    Scalar J0 = 0;
    /// min W_N indexed by N; minW[0] must be 0.
    std::vector<Scalar> minW{0.0};

    /// Throws ArgumentError if R0 or L0 is not positive, minW[0] != 0, or minW has no entry for N.
    void validate(int N) const;
};

Scalar k_N(int N, const ModelConstants& consts);

/// N-th critical field. Throws DomainError unless 0 < eps < 1.
Scalar H_N(int N, Scalar eps, const ModelConstants& consts);

/// Leading two orders of the first critical field: (|log eps| + (gamma L0 + C_Omega) / (pi L0)) / (2 R0).
Scalar hc1_expansion(Scalar eps, const ModelConstants& consts);

struct EnergyBreakdown
{
    /// h_ex^2 J0
    Scalar meissner = 0;
    /// (pi/2) L0 N (N-1) log h_ex
    Scalar log_field = 0;
    /// -2 pi K R0 L0 N log|log eps|
    Scalar log_log = 0;
    /// -(pi/2) L0 N (N-1) log N
    Scalar log_count = 0;
    /// min W_N
    Scalar renormalized = 0;
    /// gamma N L0
    Scalar core = 0;
    /// N^2 C_Omega
    Scalar self_interaction = 0;
    /// (h_ex - |log eps| / (2 R0)) / log|log eps|
    Scalar K = 0;
    Scalar total = 0;
};

/// Energy of N filaments at applied field h_ex, term by term. N = 0 is the Meissner state.
EnergyBreakdown energy_expansion(int N, Scalar h_ex, Scalar eps, const ModelConstants& consts);

/// g_eps(N) in its f_eps(N) + min W_N + gamma L0 N form; equal to energy_expansion(...).total.
Scalar g_eps(int N, Scalar h_ex, Scalar eps, const ModelConstants& consts);

/// argmin of g_eps over N in {0, ..., N_max}, ties going to the smaller N.
int optimal_N(Scalar h_ex, Scalar eps, const ModelConstants& consts, int N_max);

/// Field h > (N - 1) / (2 R0) solving g_eps(N) = g_eps(N-1), by safeguarded Newton.
/// Throws DomainError if N filaments never cost more than N - 1, so there is no transition.
Scalar break_even_field(int N, Scalar eps, const ModelConstants& consts);

struct CriticalFieldRow
{
    int N = 0;
    Scalar k_N = 0;
    Scalar H_N = 0;
    /// g_eps(N) at h_ex = H_N
    Scalar g_eps_N = 0;
};

struct CriticalFieldTable
{
    Scalar eps = 0;
    std::vector<CriticalFieldRow> rows;
    /// Whether H_N is strictly increasing along the rows.
    bool increasing = true;
};

CriticalFieldTable critical_field_table(Scalar eps, const ModelConstants& consts, int N_max);
} // namespace vfe
