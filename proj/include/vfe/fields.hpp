#pragma once

#include <functional>
#include <vector>

#include "vfe/geometry.hpp"
#include "vfe/numeric.hpp"

namespace vfe
{
/// The 2-form dB0 in tube coordinates (u1, u2, s), as an antisymmetric 3x3 matrix.
using CurlForm = std::function<Mat3(const Vec2& u, Scalar s)>;

/// Axis data of dB0. With v = (v, 0) horizontal:
///   dB0(u, e3)           = dB0_u_e3(s) . u
///   dB0(u, v)            = dB0_uv(s) * (u x v)
///   (d_u dB0)(u, e3)     = u^T ddB0_u_e3(s) u
struct FieldJet
{
    std::function<Vec2(Scalar s)> dB0_u_e3;
    std::function<Scalar(Scalar s)> dB0_uv;
    std::function<Mat2(Scalar s)> ddB0_u_e3;
};

/// Axis jet of a curl form by fourth-order central differences.
FieldJet field_jet_from_curl(const CurlForm& curl, Scalar step = 1e-3);

/// e_theta component of curl B0 in the ball B_rho at spherical radius r and polar angle phi.
Scalar ball_meissner_curl(Scalar rho, Scalar r, Scalar phi);

/// Flux of B0 through the vertical diameter of B_rho, by adaptive quadrature over the
/// meridian half-disk.
Scalar flux_gamma0_ball(Scalar rho);

/// dB0 of the ball in the chart of `ball_chart(rho)`.
CurlForm ball_curl_form(Scalar rho);

/// Everything the ratio needs to know about the field of the ball.
struct BallField
{
    CurlForm curl;
    FieldJet jet;
    Scalar flux0 = 0;
};

BallField ball_field(Scalar rho);

/// <B0, Gamma> - <B0, Gamma_0>, integrating dB0 over the ruled surface
/// (sigma, s) -> (sigma u(s), s). Trapezoid in s (element derivative at both element
/// ends), Gauss-Legendre with `sigma_points` nodes in sigma.
Scalar flux_difference(const SampledGraph& curve, const TubeChart& chart, const CurlForm& curl,
                       int sigma_points = 10);

/// Closed polyline; the last vertex connects back to the first.
struct ClosedCurve3D
{
    std::vector<Vec3> points;

    /// Throws ArgumentError for fewer than 3 vertices or repeated consecutive vertices.
    void validate() const;
};

/// Smooth closed curve t -> position(t), t in [0, period), sampled with the periodic
/// trapezoid rule. Accurate only at distances well above the sample spacing.
struct ParametricLoop
{
    std::function<Vec3(Scalar)> position;
    std::function<Vec3(Scalar)> velocity;
    Scalar period = 2 * pi;
    int samples = 4096;
};

/// X(p) = 1/2 int (Gamma - p) x Gamma' / |Gamma - p|^3, integrated exactly on each segment.
Vec3 biot_savart_eval(const ClosedCurve3D& curve, const Vec3& p, Scalar multiplicity = 1);
Vec3 biot_savart_eval(const ParametricLoop& loop, const Vec3& p);

/// Leading singular part (p_G - p) / |p_G - p|^2 x tau(p_G) at the nearest curve point p_G.
Vec3 biot_savart_nearfield(const ClosedCurve3D& curve, const Vec3& p);

/// Polyline approximation of the unit-speed circle of given radius in the xy-plane.
ClosedCurve3D circle_polyline(Scalar radius, int segments);

/// Vertical diameter of the ball closed by the arc of the circle through both poles
/// centred at (rho, 0, 0); the arc lies outside the ball.
ClosedCurve3D ball_diameter_loop(Scalar rho, int arc_segments);

struct COmegaOptions
{
    int arc_segments = 256;
    /// Scales the number of quadrature nodes in every direction.
    Scalar resolution = 1;
    Scalar multiplicity = 1;
};

struct COmegaReport
{
    std::vector<Scalar> rho;
    std::vector<Scalar> energy;
    std::vector<Scalar> counterterm;
    std::vector<Scalar> sum;
    Scalar extrapolated = 0;
};

/// Approximate C_Omega for the ball: S(r) = 1/2 int_{B \ T_r} |X|^2 + pi L0 log r over the
/// decreasing cut radii r, extrapolated to r -> 0 assuming a first-order remainder.
/// The induced-field and phase corrections of the exact constant are not included.
COmegaReport c_omega_estimate(const BallGeometry& ball, const std::vector<Scalar>& rho_cuts,
                              const COmegaOptions& options = {});

} // namespace vfe
