#include "vfe/geometry.hpp"

#include <cmath>
#include <string>

#include "vfe/errors.hpp"
#include "vfe/finite_difference.hpp"
#include "vfe/quadrature.hpp"

namespace vfe
{
AxisJet axis_jet_from_chart(const TubeChart& chart, Scalar step)
{
    AxisJet jet;
    jet.g_axis = [chart](Scalar s) -> Mat2 { return chart.g_perp(Vec2::Zero(), s); };
    jet.dg33 = [chart, step](Scalar s) -> Vec2 {
        const auto g33 = [&](const Vec2& u) { return chart.g33(u, s); };
        return Vec2(fd::directional(g33, Vec2::Zero(), Vec2::UnitX(), step),
                    fd::directional(g33, Vec2::Zero(), Vec2::UnitY(), step));
    };
    jet.d2g33 = [chart, step](Scalar s) -> Mat2 {
        const auto along = [&](const Vec2& e) {
            return fd::second_derivative([&](Scalar t) { return chart.g33(t * e, s); }, step);
        };
        const auto g33 = [&](const Vec2& u) { return chart.g33(u, s); };
        Mat2 h;
        h(0, 0) = along(Vec2::UnitX());
        h(1, 1) = along(Vec2::UnitY());
        h(0, 1) = h(1, 0) = fd::mixed(g33, Vec2::Zero(), Vec2::UnitX(), Vec2::UnitY(), step);
        return h;
    };
    return jet;
}

Vec2 ball_meridian_point(Scalar rho, Scalar x, Scalar z)
{
    const Scalar den = 1 + x * x * z * z;
    return {rho * x * (1 + z * z) / den, rho * z * (1 - x * x) / den};
}

BallChart ball_chart(Scalar rho)
{
    if (!(rho > 0) || !std::isfinite(rho))
    {
        throw DomainError("ball_chart: rho must be positive, got " + std::to_string(rho));
    }
    BallChart out;
    out.ball.rho = rho;
    TubeChart& chart = out.chart;
    chart.length = 2 * rho;
    chart.radius = 0.5;
    chart.metric = [rho](const Vec2& u, Scalar s) -> Mat3 {
        const Scalar z = ball_mobius_z(rho, s);
        const Scalar q = u.squaredNorm();
        const Scalar den = 1 + q * z * z;
        const Scalar conformal = rho * (1 + z * z) / den;
        Mat3 g = Mat3::Zero();
        g(0, 0) = g(1, 1) = conformal * conformal;
        g(2, 2) = (1 - q) * (1 - q) / (den * den);
        return g;
    };
    chart.embedding = [rho](const Vec2& u, Scalar s) -> Vec3 {
        const Scalar z = ball_mobius_z(rho, s);
        const Scalar q = u.squaredNorm();
        const Scalar den = 1 + q * z * z;
        const Scalar c = rho * (1 + z * z) / den;
        return {c * u.x(), c * u.y(), rho * z * (1 - q) / den};
    };
    out.axis_jet = axis_jet_from_chart(chart);
    // The perpendicular metric on the axis is available in closed form.
    out.axis_jet.g_axis = [rho](Scalar s) -> Mat2 {
        const Scalar z = ball_mobius_z(rho, s);
        const Scalar c = rho * (1 + z * z);
        return c * c * Mat2::Identity();
    };
    return out;
}

void SampledGraph::validate() const
{
    if (nodes.size() < 2)
    {
        throw ArgumentError("SampledGraph: at least two nodes required");
    }
    if (u.rows() != nodes.size())
    {
        throw ArgumentError("SampledGraph: node count " + std::to_string(nodes.size()) +
                            " does not match displacement count " + std::to_string(u.rows()));
    }
    for (Eigen::Index k = 0; k < nodes.size(); ++k)
    {
        if (!std::isfinite(nodes[k]) || !u.row(k).allFinite())
        {
            throw ArgumentError("SampledGraph: non-finite value at node " + std::to_string(k));
        }
        if (k > 0 && !(nodes[k] > nodes[k - 1]))
        {
            throw ArgumentError("SampledGraph: nodes not strictly increasing at node " + std::to_string(k));
        }
    }
}

VecX uniform_nodes(Scalar length, Eigen::Index count)
{
    if (count < 2)
    {
        throw ArgumentError("uniform_nodes: need at least two nodes");
    }
    return VecX::LinSpaced(count, 0, length);
}

SampledGraph axis_graph(const VecX& nodes) { return {nodes, Displacements::Zero(nodes.size(), 2)}; }

void require_inside(const SampledGraph& curve, Scalar limit, const char* what)
{
    for (Eigen::Index k = 0; k < curve.size(); ++k)
    {
        if (!(curve.u.row(k).norm() < limit))
        {
            throw DomainError(std::string(what) + ": curve leaves the admissible tube at node " + std::to_string(k) +
                              " (|u| = " + std::to_string(curve.u.row(k).norm()) + ", limit " +
                              std::to_string(limit) + ")");
        }
    }
}

namespace
{
// Sum over elements of (h/2) * sum_{j in ends} f(u_j, s_j, d_e).
template <typename F>
Scalar element_trapezoid(const SampledGraph& curve, const F& f)
{
    Scalar total = 0;
    for (Eigen::Index k = 0; k + 1 < curve.size(); ++k)
    {
        const Scalar h = curve.nodes[k + 1] - curve.nodes[k];
        const Vec2 d = (curve.at(k + 1) - curve.at(k)) / h;
        total += 0.5 * h * (f(curve.at(k), curve.nodes[k], d) + f(curve.at(k + 1), curve.nodes[k + 1], d));
    }
    return total;
}

} // namespace

Scalar curve_length(const SampledGraph& curve, const TubeChart& chart)
{
    curve.validate();
    require_inside(curve, chart.radius, "curve_length");
    return element_trapezoid(curve, [&](const Vec2& u, Scalar s, const Vec2& d) {
        const Mat3 g = chart.metric(u, s);
        return std::sqrt(g(2, 2) + d.dot(g.topLeftCorner<2, 2>() * d));
    });
}

Scalar curve_length_excess(const SampledGraph& curve, const TubeChart& chart)
{
    curve.validate();
    require_inside(curve, chart.radius, "curve_length_excess");
    const Scalar span = curve.nodes[curve.size() - 1] - curve.nodes[0];
    const Scalar excess = element_trapezoid(curve, [&](const Vec2& u, Scalar s, const Vec2& d) {
        const Mat3 g = chart.metric(u, s);
        const Scalar a = g(2, 2) - 1 + d.dot(g.topLeftCorner<2, 2>() * d);
        return a / (std::sqrt(1 + a) + 1);
    });
    return excess + (span - chart.length);
}

Scalar length_second_variation_ball(const VecX& z, const VecX& x, const VecX& theta, Scalar rho)
{
    if (z.size() < 2 || x.size() != z.size() || theta.size() != z.size())
    {
        throw ArgumentError("length_second_variation_ball: x and theta must be sampled on the z grid");
    }
    // Exact integration of the piecewise-linear interpolants: the integrand is a
    // polynomial of degree <= 6 on each element.
    const quad::Rule& rule = quad::gauss_legendre(4);
    Scalar total = 0;
    for (Eigen::Index k = 0; k + 1 < z.size(); ++k)
    {
        const Scalar h = z[k + 1] - z[k];
        if (!(h > 0))
        {
            throw ArgumentError("length_second_variation_ball: z grid must be strictly increasing");
        }
        const Scalar dx = (x[k + 1] - x[k]) / h;
        const Scalar dtheta = (theta[k + 1] - theta[k]) / h;
        for (std::size_t q = 0; q < rule.nodes.size(); ++q)
        {
            const Scalar t = 0.5 * (rule.nodes[q] + 1);
            const Scalar zz = z[k] + t * h;
            const Scalar xx = x[k] + t * (x[k + 1] - x[k]);
            const Scalar w = 1 + zz * zz;
            total += 0.5 * h * rule.weights[q] *
                     (0.5 * dx * dx * w * w - xx * xx * w + 0.5 * xx * xx * w * w * dtheta * dtheta);
        }
    }
    return rho * total;
}

} // namespace vfe
