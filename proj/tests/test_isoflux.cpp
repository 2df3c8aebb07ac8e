#include <doctest.h>

#include <cmath>
#include <random>

#include "vfe/errors.hpp"
#include "vfe/isoflux.hpp"
#include "vfe/quadrature.hpp"

using namespace vfe;

namespace
{
// A non-symmetric test geometry. With `critical` the field satisfies the criticality
// identity on the axis for R0 = 1.
RatioContext synthetic_context(bool critical)
{
    TubeChart chart;
    chart.length = 1;
    chart.radius = 1;
    chart.metric = [](const Vec2& u, Scalar s) -> Mat3 {
        Mat3 g = Mat3::Zero();
        g(0, 0) = 1 + 0.2 * s + 0.1 * u.x() * u.x();
        g(1, 1) = 1.3 - 0.1 * s + 0.05 * u.y();
        g(0, 1) = g(1, 0) = 0.05 * u.x() * u.y() + 0.1;
        g(2, 2) = std::exp(0.4 * u.x() - 0.3 * u.squaredNorm() + 0.2 * s * u.y() + 0.1 * u.x() * u.y());
        return g;
    };
    const Scalar shift = critical ? 0.0 : 0.05;
    const CurlForm curl = [shift](const Vec2& u, Scalar s) -> Mat3 {
        Mat3 w = Mat3::Zero();
        w(0, 1) = 0.5 + 0.2 * s + 0.3 * u.x();
        w(0, 2) = 0.2 + shift - 0.4 * u.x() + 0.1 * u.y() + 0.2 * u.x() * u.y();
        w(1, 2) = 0.1 * s + 0.3 * u.x() - 0.6 * u.y();
        return w - Mat3(w.transpose());
    };
    return make_ratio_context(chart, axis_jet_from_chart(chart), curl, field_jet_from_curl(curl), 1.0);
}

SampledGraph random_graph(const VecX& nodes, Scalar amplitude, std::mt19937_64& rng)
{
    std::uniform_real_distribution<Scalar> unit(-1, 1);
    SampledGraph g = axis_graph(nodes);
    // Smooth random curve: a few low Fourier modes.
    Eigen::Matrix<Scalar, 4, 2> c;
    for (int i = 0; i < 4; ++i)
    {
        c(i, 0) = unit(rng);
        c(i, 1) = unit(rng);
    }
    const Scalar L = nodes[nodes.size() - 1];
    for (Eigen::Index k = 0; k < nodes.size(); ++k)
    {
        for (int i = 0; i < 4; ++i)
        {
            const Scalar phase = pi * i * nodes[k] / L;
            g.u.row(k) += 0.25 * amplitude * c.row(i) * std::cos(phase + i);
        }
    }
    return g;
}

SampledGraph scaled(const SampledGraph& g, Scalar t) { return {g.nodes, t * g.u}; }

Scalar second_difference(const SampledGraph& g, const RatioContext& ctx, Scalar t)
{
    return (ratio_excess(scaled(g, t), ctx) - 2 * ratio_excess(scaled(g, 0), ctx) + ratio_excess(scaled(g, -t), ctx)) /
           (t * t);
}

SampledGraph ball_variation(Scalar rho, Eigen::Index n, const std::function<Scalar(Scalar)>& x,
                            const std::function<Scalar(Scalar)>& theta)
{
    SampledGraph g = axis_graph(uniform_nodes(2 * rho, n));
    for (Eigen::Index k = 0; k < n; ++k)
    {
        const Scalar z = ball_mobius_z(rho, g.nodes[k]);
        g.u.row(k) << x(z) * std::cos(theta(z)), x(z) * std::sin(theta(z));
    }
    return g;
}

} // namespace

TEST_CASE("ratio of the axis and of a bulge")
{
    const RatioContext ctx = ball_ratio_context(0.1);
    CHECK(ctx.R0 == ctx.flux0 / 0.2);
    const SampledGraph axis = axis_graph(uniform_nodes(0.2, 41));
    CHECK(ratio(axis, ctx) == ctx.R0);
    CHECK(ratio_excess(axis, ctx) == 0.0);
    const SampledGraph bulge = ball_variation(0.1, 41, [](Scalar) { return 1e-2; }, [](Scalar) { return 0.0; });
    CHECK(ratio(bulge, ctx) < ctx.R0);
    CHECK(ratio(bulge, ctx) - ctx.R0 == doctest::Approx(ratio_excess(bulge, ctx)).epsilon(1e-6));
    CHECK_THROWS_AS(make_ratio_context(ctx.chart, ctx.axis_jet, ctx.curl, ctx.field_jet, -1.0), DomainError);
}

TEST_CASE("ratio gradient against central differences")
{
    std::mt19937_64 rng(5);
    for (const RatioContext& ctx : {ball_ratio_context(0.1), synthetic_context(false)})
    {
        const VecX nodes = uniform_nodes(ctx.chart.length, 17);
        const SampledGraph g = random_graph(nodes, 0.2, rng);
        const Displacements grad = ratio_gradient(g, ctx);
        Displacements numeric(g.size(), 2);
        const Scalar h = 1e-6;
        for (Eigen::Index k = 0; k < g.size(); ++k)
        {
            for (int c = 0; c < 2; ++c)
            {
                SampledGraph plus = g, minus = g;
                plus.u(k, c) += h;
                minus.u(k, c) -= h;
                numeric(k, c) = (ratio_excess(plus, ctx) - ratio_excess(minus, ctx)) / (2 * h);
            }
        }
        const Scalar scale = numeric.cwiseAbs().maxCoeff();
        CHECK((grad - numeric).cwiseAbs().maxCoeff() <= 1e-6 * scale);
    }
}

TEST_CASE("q form basics and matrix assembly")
{
    const RatioContext ctx = synthetic_context(false);
    const QFormSpec spec = q_form_spec(ctx);
    const VecX nodes = uniform_nodes(1, 25);
    std::mt19937_64 rng(9);
    const SampledGraph g = random_graph(nodes, 0.3, rng);
    CHECK(q_form(axis_graph(nodes), spec) == 0.0);
    CHECK(q_form(scaled(g, 3.0), spec) == doctest::Approx(9 * q_form(g, spec)).epsilon(1e-13));
    const SparseMatrix k = q_matrix(spec, nodes);
    CHECK(MatX(k - SparseMatrix(k.transpose())).cwiseAbs().maxCoeff() <= 1e-12 * MatX(k).cwiseAbs().maxCoeff());
    VecX x(2 * nodes.size());
    for (Eigen::Index i = 0; i < nodes.size(); ++i)
    {
        x.segment<2>(2 * i) = g.at(i);
    }
    CHECK(x.dot(k * x) == doctest::Approx(q_form(g, spec)).epsilon(1e-12));
}

TEST_CASE("gridded q form gradient is the matrix product")
{
    const RatioContext ctx = synthetic_context(false);
    const QFormSpec spec = q_form_spec(ctx);
    const VecX nodes = uniform_nodes(1, 17);
    std::mt19937_64 rng(4);
    const SampledGraph g = random_graph(nodes, 0.3, rng);
    const QGrid grid = q_grid(spec, nodes);
    Displacements grad;
    const Scalar q = q_form(grid, g.u, &grad);
    CHECK(q == doctest::Approx(q_form(g, spec)).epsilon(1e-12));
    VecX x(2 * nodes.size());
    for (Eigen::Index i = 0; i < nodes.size(); ++i)
    {
        x.segment<2>(2 * i) = g.at(i);
    }
    const VecX kx = q_matrix(spec, nodes) * x;
    for (Eigen::Index i = 0; i < nodes.size(); ++i)
    {
        CHECK((grad.row(i).transpose() - 2 * kx.segment<2>(2 * i)).norm() <= 1e-10);
    }
    CHECK_THROWS_AS(q_form(grid, Displacements::Zero(3, 2)), ArgumentError);
}

TEST_CASE("q form is minus the second variation at a critical axis")
{
    const RatioContext ctx = synthetic_context(true);
    CHECK(criticality_residual(ctx, {0.0, 0.3, 0.7, 1.0}, {Vec2(1, 0), Vec2(0, 1), Vec2(0.6, 0.8)}) < 1e-9);
    const QFormSpec spec = q_form_spec(ctx);
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 3; ++trial)
    {
        const SampledGraph g = random_graph(uniform_nodes(1, 31), 1.0, rng);
        CHECK(-second_difference(g, ctx, 1e-3) == doctest::Approx(q_form(g, spec)).epsilon(1e-5));
    }
}

TEST_CASE("ball: q form, closed-form hessian and the ratio")
{
    const Scalar rho = 0.05;
    const RatioContext ctx = ball_ratio_context(rho);
    const QFormSpec spec = q_form_spec(ctx);
    const Eigen::Index n = 201;
    const auto x = [](Scalar z) { return 0.5 + 0.3 * z - 0.2 * z * z; };
    const auto theta = [](Scalar z) { return 0.4 * z; };
    const SampledGraph g = ball_variation(rho, n, x, theta);
    const Scalar fd = -second_difference(g, ctx, 1e-3);
    CHECK(fd == doctest::Approx(q_form(g, spec)).epsilon(1e-3));

    const VecX z = VecX::LinSpaced(n, -1, 1);
    const VecX xs = z.unaryExpr(x);
    const VecX ths = z.unaryExpr(theta);
    const Scalar closed = ball_hessian_closed_form(z, xs, ths, rho);
    CHECK(std::abs(-closed - fd) <= 10 * rho * std::abs(fd));
    CHECK(std::abs(-closed - fd) <= 0.01 * std::abs(fd));

    CHECK(ball_hessian_closed_form(z, VecX::Zero(n), ths, rho) == 0.0);
    CHECK(ball_hessian_closed_form(z, VecX::Ones(n), VecX::Zero(n), 0.1) ==
          doctest::Approx(-0.01 * 88 / 180).epsilon(1e-13));
}

TEST_CASE("criticality residual")
{
    const RatioContext ball = ball_ratio_context(0.2);
    std::vector<Scalar> s;
    std::vector<Vec2> dirs;
    for (int i = 0; i < 10; ++i)
    {
        s.push_back(0.4 * i / 9);
        dirs.emplace_back(std::cos(0.7 * i), std::sin(0.7 * i));
    }
    CHECK(criticality_residual(ball, s, dirs) <= 1e-6);

    RatioContext shifted = ball;
    const Vec2 c(3e-3, -4e-3);
    shifted.field_jet.dB0_u_e3 = [base = ball.field_jet.dB0_u_e3, c](Scalar t) -> Vec2 { return base(t) + c; };
    CHECK(criticality_residual(shifted, s, {c.normalized()}) == doctest::Approx(c.norm()).epsilon(1e-6));
    CHECK(criticality_residual(shifted, s, {Vec2(0.6, 0.8)}) == criticality_residual(shifted, s, {Vec2(-0.6, -0.8)}));
}

TEST_CASE("q spectrum")
{
    const QFormSpec ball = q_form_spec(ball_ratio_context(0.1));
    const QSpectrum spec = q_spectrum(ball, 32);
    CHECK(spec.lambda_min > 0);
    CHECK(spec.refined_lambda_min > 0);
    CHECK(std::abs(spec.refined_lambda_min - spec.lambda_min) <= 0.1 * spec.lambda_min);
    CHECK(spec.alpha_Q == spec.lambda_max);
    CHECK(spec.eigenvalues.size() == 64);
    CHECK(spec.refined_eigenvalues.size() == 2 * 63);

    QFormSpec kinetic;
    kinetic.L0 = 1;
    kinetic.R0 = 0.5;
    kinetic.coefficients = [](Scalar) { return QCoefficients{}; };
    CHECK(std::abs(q_spectrum(kinetic, 16).lambda_min) < 1e-12);

    QFormSpec flipped = ball;
    flipped.coefficients = [base = ball.coefficients](Scalar s) {
        QCoefficients c = base(s);
        c.curl_uv *= -10;
        c.curl_gradient *= -10;
        return c;
    };
    CHECK(q_spectrum(flipped, 16).lambda_min < 0);

    QFormSpec broken = kinetic;
    broken.coefficients = [](Scalar) {
        QCoefficients c;
        c.g_axis = -Mat2::Identity();
        return c;
    };
    CHECK_THROWS_AS(q_spectrum(broken, 8), ConsistencyError);
    CHECK_THROWS_AS(q_spectrum(kinetic, 3), ArgumentError);
}

TEST_CASE("q_ell identity and coercivity")
{
    const RatioContext ctx = ball_ratio_context(0.1);
    const VecX nodes = uniform_nodes(0.2, 51);
    std::mt19937_64 rng(13);
    CHECK(q_ell(axis_graph(nodes), 0.3, ctx) == 0.0);
    for (int i = 0; i < 20; ++i)
    {
        const SampledGraph g = random_graph(nodes, 0.1, rng);
        const Scalar lhs = ctx.R0 * q_ell(g, 1, ctx);
        const Scalar length = curve_length(g, ctx.chart);
        const Scalar rhs = length * (ctx.R0 - ratio(g, ctx));
        CHECK(std::abs(lhs - rhs) <= 1e-10 * std::abs(rhs));
        // Exact identity through the excess form as well.
        CHECK(lhs == doctest::Approx(-length * ratio_excess(g, ctx)).epsilon(1e-12));
        for (Scalar ell : {1.0, 0.5, 0.2})
        {
            CHECK(q_ell(scaled(g, 0.1 * ell), ell, ctx) >= 0);
        }
    }
    SampledGraph far = axis_graph(nodes);
    far.u.row(3) << 0.3, 0;
    CHECK_THROWS_AS(q_ell(far, 1, ctx), DomainError);
    CHECK_THROWS_AS(q_ell(axis_graph(nodes), 0, ctx), ArgumentError);
}

TEST_CASE("length expansion has a cubic remainder")
{
    const RatioContext ctx = synthetic_context(true);
    const VecX nodes = uniform_nodes(1, 41);
    const VecX w = quad::trapezoid_weights(nodes);
    std::mt19937_64 rng(17);
    const SampledGraph g = random_graph(nodes, 1.0, rng);
    const auto remainder = [&](Scalar t) {
        Scalar perp = 0, par = 0, flux_perp = 0;
        for (Eigen::Index k = 0; k < nodes.size(); ++k)
        {
            const Vec2 u = t * g.at(k);
            const Vec2 c = ctx.axis_jet.dg33(nodes[k]);
            const Mat2 a = 0.25 * ctx.axis_jet.d2g33(nodes[k]) - 0.125 * c * c.transpose();
            perp += w[k] * 0.5 * c.dot(u);
            par += w[k] * u.dot(a * u);
            flux_perp += w[k] * ctx.field_jet.dB0_u_e3(nodes[k]).dot(u);
        }
        CHECK(ctx.R0 * perp == doctest::Approx(flux_perp).epsilon(1e-9));
        return std::abs(mean_length(scaled(g, t), ctx.chart) - (1 + perp + par));
    };
    const Scalar e1 = remainder(0.08);
    const Scalar e2 = remainder(0.04);
    const Scalar e3 = remainder(0.02);
    CHECK(e1 / e2 == doctest::Approx(8).epsilon(0.15));
    CHECK(e2 / e3 == doctest::Approx(8).epsilon(0.1));
}

TEST_CASE("maximize ratio recovers the diameter")
{
    const RatioContext ctx = ball_ratio_context(0.1);
    const VecX nodes = uniform_nodes(0.2, 41);

    const MaximizeResult trivial = maximize_ratio(axis_graph(nodes), ctx);
    CHECK(trivial.iterations == 0);
    CHECK(trivial.status == opt::Status::converged);

    std::mt19937_64 rng(1);
    std::uniform_real_distribution<Scalar> unit(-1, 1);
    SampledGraph start = axis_graph(nodes);
    for (Eigen::Index k = 0; k < nodes.size(); ++k)
    {
        start.u.row(k) << unit(rng), unit(rng);
    }
    start.u *= 0.01 / start.u.cwiseAbs().maxCoeff();
    const Scalar initial = ratio(start, ctx);
    const MaximizeResult result = maximize_ratio(start, ctx);
    CHECK(result.status == opt::Status::converged);
    CHECK(result.curve.u.cwiseAbs().maxCoeff() < 1e-6);
    CHECK(result.ratio >= initial);
    for (std::size_t i = 1; i < result.trace.size(); ++i)
    {
        CHECK(result.trace[i].ratio >= result.trace[i - 1].ratio);
    }
    MESSAGE("iterations " << result.iterations);
}
