#pragma once

#include <functional>

#include "vfe/numeric.hpp"

namespace vfe
{
/// Coordinates (u, s) in a tube around a reference curve: u in R^2 is the horizontal
/// displacement, s in [0, length] the arclength along the axis. The metric must satisfy
/// g13 = g23 = 0 and g33(0, s) = 1.
struct TubeChart
{
    Scalar length = 0;
    Scalar radius = 0;
    std::function<Mat3(const Vec2& u, Scalar s)> metric;
    /// Optional map into ambient R^3.
    std::function<Vec3(const Vec2& u, Scalar s)> embedding;

    Scalar g33(const Vec2& u, Scalar s) const { return metric(u, s)(2, 2); }
    Mat2 g_perp(const Vec2& u, Scalar s) const { return metric(u, s).topLeftCorner<2, 2>(); }
    bool contains(const Vec2& u) const { return u.norm() < radius; }
};

/// Taylor data of the metric along the axis.
struct AxisJet
{
    /// Perpendicular metric on the axis, g^bullet(s).
    std::function<Mat2(Scalar s)> g_axis;
    /// (d g33)^bullet_s as a covector on R^2.
    std::function<Vec2(Scalar s)> dg33;
    /// (d^2 g33)^bullet_s as a symmetric bilinear form on R^2.
    std::function<Mat2(Scalar s)> d2g33;
};

/// Axis jet of an arbitrary chart by fourth-order central differences of its metric.
AxisJet axis_jet_from_chart(const TubeChart& chart, Scalar step = 1e-3);

struct BallGeometry
{
    Scalar rho = 0;
};

struct BallChart
{
    BallGeometry ball;
    TubeChart chart;
    AxisJet axis_jet;
};

/// Tube chart of the ball B_rho around its vertical diameter, built from the Moebius
/// coordinates R + iZ = rho (x + iz) / (1 + ixz) with the axis reparametrized by
/// arclength s = rho (1 + z). Horizontal coordinates are u = x (cos theta, sin theta);
/// the chart radius is 1/2 in these units.
BallChart ball_chart(Scalar rho);

/// Meridian point (R, Z) of the Moebius coordinates (x, z) of the ball.
Vec2 ball_meridian_point(Scalar rho, Scalar x, Scalar z);

/// Moebius vertical coordinate of the arclength s along the ball diameter.
inline Scalar ball_mobius_z(Scalar rho, Scalar s) { return s / rho - 1; }

/// Curve Gamma(s) = Gamma_0(s) + u(s), piecewise linear between nodes.
struct SampledGraph
{
    VecX nodes;
    Displacements u;

    Eigen::Index size() const { return nodes.size(); }
    Vec2 at(Eigen::Index k) const { return u.row(k).transpose(); }

    /// Throws ArgumentError unless nodes are strictly increasing (>= 2) and values finite.
    void validate() const;
};

/// `count` equally spaced nodes on [0, length].
VecX uniform_nodes(Scalar length, Eigen::Index count);

/// The reference curve itself, u = 0.
SampledGraph axis_graph(const VecX& nodes);

/// Throws DomainError naming the first node with |u| >= limit.
void require_inside(const SampledGraph& curve, Scalar limit, const char* what);

/// Length of the curve in the chart metric, sqrt(g33 + |u'|_g^2) integrated with the
/// composite trapezoid rule (element derivative evaluated at both element ends).
Scalar curve_length(const SampledGraph& curve, const TubeChart& chart);

/// |Gamma| - length of the axis, accumulated without cancellation against L0.
Scalar curve_length_excess(const SampledGraph& curve, const TubeChart& chart);

/// Second-order coefficient of the length of t -> (t x(z), z, theta(z)) in the ball:
/// rho * int_{-1}^{1} x'^2 (1+z^2)^2 / 2 - x^2 (1+z^2) + x^2 (1+z^2)^2 theta'^2 / 2 dz,
/// so that |Gamma_t| = 2 rho + t^2 * (this) + O(t^4).
Scalar length_second_variation_ball(const VecX& z, const VecX& x, const VecX& theta, Scalar rho);

} // namespace vfe
