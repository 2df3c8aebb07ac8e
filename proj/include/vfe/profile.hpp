#pragma once

#include <vector>

#include "vfe/numeric.hpp"

namespace vfe
{
/// Degree-one radial vortex profile sampled on a uniform grid over [0, R_max].
struct RadialProfile
{
    VecX r_nodes;
    VecX f_values;
    /// f' at the nodes, from the same fourth-order stencils as the solve.
    VecX df_values;
    /// Max-norm ODE residual at interior nodes after the last Newton step.
    Scalar residual = 0;
    int newton_iterations = 0;

    Scalar R_max() const { return r_nodes[r_nodes.size() - 1]; }
    /// Cubic Hermite interpolation of f and f'. Throws DomainError outside [0, R_max].
    Scalar value(Scalar r) const;
    Scalar derivative(Scalar r) const;
};

/// Solves f'' + f'/r - f/r^2 + f (1 - f^2) = 0, f(0) = 0, f(R_max) = 1 - 1/(2 R_max^2) by damped
/// Newton on fourth-order finite differences. Requires R_max >= 20 and node_count >= 2000;
/// throws ConvergenceError (with the residual history) if Newton stalls.
RadialProfile solve_f0(Scalar R_max, int node_count);

/// 2 pi I(R) - pi log R with I(R) = 1/2 int_0^R (f'^2 + f^2/r^2 + (1 - f^2)^2 / 2) r dr.
Scalar gamma_from_profile(const RadialProfile& profile, Scalar R);

/// 2 pi int_0^{R} (f'^2 / F^2 + f^2 / (s^2 F^2) + (1 - f^2 / F^2)^2 / 2) s ds with R = r_eps / eps and
/// F = f(R).
Scalar disk_vortex_energy(Scalar eps, Scalar r_eps, const RadialProfile& profile);

struct PerforatedCheck
{
    Scalar numeric = 0;
    Scalar closed_form = 0;
    Scalar deviation = 0;
};

struct PerforatedOptions
{
    Scalar tolerance = 1e-10;
};

/// Half the Dirichlet energy of sum_j (x_j - x)^perp / |x_j - x|^2 on D(0, delta) with the disks
/// D(x_i, r) removed, against -pi sum_{i != j} log|x_i - x_j| + pi N log(1/r) + pi N^2 log delta.
/// Throws DomainError if the removed disks overlap or leave D(0, delta).
PerforatedCheck perforated_renormalized_check(const std::vector<Vec2>& points, Scalar delta, Scalar r,
                                              const PerforatedOptions& options = {});
} // namespace vfe
