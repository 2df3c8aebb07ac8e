#pragma once

#include <functional>
#include <vector>

#include <Eigen/SparseCore>

#include "vfe/fields.hpp"
#include "vfe/geometry.hpp"
#include "vfe/lbfgs.hpp"

namespace vfe
{

/// Data defining the isoflux ratio R(Gamma) = <B0, Gamma> / |Gamma| near the axis.
struct RatioContext
{
    TubeChart chart;
    AxisJet axis_jet;
    CurlForm curl;
    FieldJet field_jet;
    Scalar flux0 = 0;
    Scalar R0 = 0;
};

/// Throws DomainError unless flux0 / chart.length > 0.
RatioContext make_ratio_context(TubeChart chart, AxisJet axis_jet, CurlForm curl, FieldJet field_jet, Scalar flux0);

/// Ball of radius rho with its vertical diameter as the reference curve.
RatioContext ball_ratio_context(Scalar rho);

/// Pointwise coefficients of
///   Q(u) = (2 R0 / L0) int 1/2 u'^T G u' + u^T A u - (1 / 2R0) (b u x u' + u^T M u) ds.
struct QCoefficients
{
    Mat2 g_axis = Mat2::Identity();
    /// A = d2g33 / 4 - dg33 dg33^T / 8, the quadratic part of the length Lagrangian.
    Mat2 length_form = Mat2::Zero();
    /// b, the antisymmetric part dB0(u, v) = b u x v.
    Scalar curl_uv = 0;
    /// M, the symmetric form (d_u dB0)(u, e3) = u^T M u.
    Mat2 curl_gradient = Mat2::Zero();
};

struct QFormSpec
{
    Scalar L0 = 1;
    Scalar R0 = 0.5;
    std::function<QCoefficients(Scalar s)> coefficients;
};

QFormSpec q_form_spec(const RatioContext& ctx);

/// Q(u) on the curve's grid: trapezoid rule with the element derivative at both element ends.
Scalar q_form(const SampledGraph& u, const QFormSpec& spec);

/// Coefficients of a QFormSpec sampled once on a grid.
struct QGrid
{
    Scalar L0 = 1;
    Scalar R0 = 0.5;
    VecX nodes;
    std::vector<QCoefficients> coefficients;
};

QGrid q_grid(const QFormSpec& spec, const VecX& nodes);

/// Q(u) evaluated element by element from differences, and optionally its gradient.
Scalar q_form(const QGrid& grid, const Displacements& u, Displacements* gradient = nullptr);

/// Symmetric matrix K with Q(u) = x^T K x, x = (u_0x, u_0y, u_1x, ...).
SparseMatrix q_matrix(const QFormSpec& spec, const VecX& nodes);

/// H^1 Gram matrix of the g-weighted inner product int u'^T G v' + u^T G v.
SparseMatrix h1_gram(const QFormSpec& spec, const VecX& nodes);

/// Length <Gamma> = int sqrt(g33(u, s)) ds of the horizontal projection weight.
Scalar mean_length(const SampledGraph& curve, const TubeChart& chart);

Scalar ratio(const SampledGraph& curve, const RatioContext& ctx);

/// R(Gamma) - R0, evaluated without cancellation.
Scalar ratio_excess(const SampledGraph& curve, const RatioContext& ctx);

/// Gradient of the discrete ratio with respect to the node displacements.
Displacements ratio_gradient(const SampledGraph& curve, const RatioContext& ctx);

/// max over samples of |dB0(u, e3) - (R0 / 2) dg33(u)|.
Scalar criticality_residual(const RatioContext& ctx, const std::vector<Scalar>& s_samples,
                            const std::vector<Vec2>& directions);

struct QSpectrum
{
    Eigen::Index basis_size = 0;
    Scalar lambda_min = 0;
    Scalar lambda_max = 0;
    /// sup of the Rayleigh quotient, i.e. lambda_max.
    Scalar alpha_Q = 0;
    VecX eigenvalues;
    Eigen::Index refined_basis_size = 0;
    Scalar refined_lambda_min = 0;
    Scalar refined_lambda_max = 0;
    VecX refined_eigenvalues;
};

/// Extreme Rayleigh quotients Q(u) / |u|^2_{H^1} over continuous piecewise-linear u with M
/// nodes (2M unknowns), and again after halving the spacing (2M - 1 nodes).
QSpectrum q_spectrum(const QFormSpec& spec, Eigen::Index basis_size);

/// Second-order coefficient of the ball Hessian along t -> (t x(z), theta(z)):
/// d^2R = -(rho^2 / 12) int (1+z^2)^2 (x'^2 + x^2 theta'^2) + x^2 (1+z^2)(1+3z^2) dz.
Scalar ball_hessian_closed_form(const VecX& z, const VecX& x, const VecX& theta, Scalar rho);

/// Q_ell(Gamma) = ell^2 (|Gamma|_g~ - <Gamma>) + (<Gamma> - L0) - <B0, Gamma - Gamma0> / R0.
/// Requires |u| < radius / 2.
Scalar q_ell(const SampledGraph& curve, Scalar ell, const RatioContext& ctx);

struct MaximizeOptions
{
    Scalar tolerance = 1e-9;
    int max_iter = 500;
    /// Nodes are kept within this fraction of the chart radius.
    Scalar clip_fraction = 0.95;
};

struct RatioTraceRow
{
    int iteration;
    Scalar ratio;
    Scalar gradient_norm;
};

struct MaximizeResult
{
    SampledGraph curve;
    Scalar ratio = 0;
    Scalar gradient_norm = 0;
    int iterations = 0;
    opt::Status status = opt::Status::max_iterations;
    /// Set when some iterate was clipped back into the chart.
    bool truncated = false;
    std::vector<RatioTraceRow> trace;
};

/// Ascent on the discrete ratio: H^1-preconditioned L-BFGS with backtracking, nodes clipped to
/// the chart. The gradient norm is max_k |dR/du_k| / (w_k R0) with trapezoid weights w_k.
MaximizeResult maximize_ratio(const SampledGraph& initial, const RatioContext& ctx, const MaximizeOptions& options = {});

} // namespace vfe
