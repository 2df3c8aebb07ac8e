#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "vfe/errors.hpp"
#include "vfe/isoflux.hpp"
#include "vfe/lbfgs.hpp"

namespace vfe
{
enum class EndpointMode
{
    free,
    /// Values at the first and last node are held at the family's own values.
    clamped,
};

/// N curves u_i(s) on a shared grid over [0, L0].
struct FilamentFamily
{
    VecX nodes;
    std::vector<Displacements> curves;
    EndpointMode endpoints = EndpointMode::free;

    int size() const { return static_cast<int>(curves.size()); }
    /// Throws ArgumentError on an empty family, mismatched grids or non-finite values.
    void validate() const;
};

struct WnValue
{
    Scalar total = 0;
    /// pi L0 N sum_i Q(u_i)
    Scalar confinement = 0;
    /// -pi int sum_{i != j} log |u_i - u_j|_{g}
    Scalar interaction = 0;
};

/// Renormalized energy of the family; the interaction counts ordered pairs and uses the
/// trapezoid rule in s. Throws InfiniteEnergyError if two curves coincide at a node.
WnValue wn_energy(const FilamentFamily& family, const QFormSpec& spec);

/// Exact gradient of the discrete energy, one (nodes x 2) block per curve.
std::vector<Displacements> wn_gradient(const FilamentFamily& family, const QFormSpec& spec);

/// min over nodes and pairs of |u_i - u_j| in the axis metric (infinity for N = 1).
Scalar min_separation(const FilamentFamily& family, const QFormSpec& spec);

/// max |dW/du_{i,k}| / w_k over nodes that are free to move (w_k trapezoid weights): the
/// discrete Euler-Lagrange operator in the max norm.
Scalar el_residual(const FilamentFamily& family, const QFormSpec& spec);

/// Q(u) = int 1/2 |u'|^2 + 1/2 |u|^2 with L0 = 1, R0 = 1/2.
QFormSpec isotropic_spec(Scalar L0 = 1);

/// Q(u) = (2 R0 / L0) int 1/2 |u'|^2 with R0 = L0 / 2.
QFormSpec kinetic_spec(Scalar L0 = 1);

/// Regular N-gon of the given radius, constant along the grid.
FilamentFamily polygon_family(int N, const VecX& nodes, Scalar radius, EndpointMode endpoints = EndpointMode::free);

/// Radius of the regular N-gon minimizing W_N among constant configurations when Q is
/// isotropic: sqrt((N - 1) / (2 N q)), q the mean of Q over constant unit vectors.
Scalar polygon_radius(int N, const QFormSpec& spec, const VecX& nodes);

struct WnOptions
{
    EndpointMode endpoints = EndpointMode::free;
    /// Starting family; by default a perturbed regular N-gon on `nodes` grid points.
    std::optional<FilamentFamily> initial;
    Eigen::Index nodes = 65;
    /// Radius of the default N-gon (default: polygon_radius).
    std::optional<Scalar> radius;
    Scalar noise = 1e-3;
    std::uint64_t seed = 0;
    Scalar tolerance = 1e-8;
    int max_iter = 5000;
};

struct WnTraceRow
{
    int iteration;
    Scalar energy;
    Scalar gradient_norm;
    Scalar min_separation;
};

struct WnResult
{
    FilamentFamily family;
    WnValue value;
    Scalar gradient_norm = 0;
    int iterations = 0;
    opt::Status status = opt::Status::max_iterations;
    std::vector<WnTraceRow> trace;
};

/// Raised when the line search cannot make progress; carries the last iterate.
class StagnationError : public ConvergenceError
{
public:
    StagnationError(const std::string& what, FilamentFamily last) : ConvergenceError(what), last(std::move(last)) {}
    FilamentFamily last;
};

/// H^1-preconditioned L-BFGS descent on W_N. Steps that bring two curves closer than 1e-8
/// are rejected by the line search.
WnResult wn_minimize(int N, const QFormSpec& spec, const WnOptions& options = {});

} // namespace vfe
