#include "vfe/isoflux.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include "vfe/errors.hpp"
#include "vfe/finite_difference.hpp"
#include "vfe/quadrature.hpp"

namespace vfe
{
namespace
{
constexpr Scalar kMetricStep = 1e-4;
constexpr int kSigmaPoints = 10;

const Mat2 kRotation = (Mat2() << 0, 1, -1, 0).finished(); // u x v = u^T J v

Eigen::Index dofs(Eigen::Index nodes) { return 2 * nodes; }

VecX flatten(const Displacements& u)
{
    VecX x(2 * u.rows());
    for (Eigen::Index k = 0; k < u.rows(); ++k)
    {
        x.segment<2>(2 * k) = u.row(k).transpose();
    }
    return x;
}

Displacements unflatten(const VecX& x)
{
    Displacements u(x.size() / 2, 2);
    for (Eigen::Index k = 0; k < u.rows(); ++k)
    {
        u.row(k) = x.segment<2>(2 * k).transpose();
    }
    return u;
}

// Value and partial derivatives of a pointwise integrand psi(u, s, d).
struct Partials
{
    Scalar value = 0;
    Vec2 du = Vec2::Zero();
    Vec2 dd = Vec2::Zero();
};

// sum_e (h/2) sum_{j in e} psi(u_j, s_j, d_e) and its gradient.
template <typename Psi>
Scalar element_sum(const SampledGraph& curve, const Psi& psi, Displacements* gradient)
{
    Scalar total = 0;
    if (gradient)
    {
        gradient->setZero(curve.size(), 2);
    }
    for (Eigen::Index k = 0; k + 1 < curve.size(); ++k)
    {
        const Scalar h = curve.nodes[k + 1] - curve.nodes[k];
        const Vec2 d = (curve.at(k + 1) - curve.at(k)) / h;
        const Partials a = psi(curve.at(k), curve.nodes[k], d, gradient != nullptr);
        const Partials b = psi(curve.at(k + 1), curve.nodes[k + 1], d, gradient != nullptr);
        total += 0.5 * h * (a.value + b.value);
        if (gradient)
        {
            const Vec2 through_d = 0.5 * (a.dd + b.dd);
            gradient->row(k) += (0.5 * h * a.du - through_d).transpose();
            gradient->row(k + 1) += (0.5 * h * b.du + through_d).transpose();
        }
    }
    return total;
}

// sqrt(g33 + d^T G d) - 1, written to avoid cancellation.
Partials length_excess_density(const TubeChart& chart, const Vec2& u, Scalar s, const Vec2& d, bool derivatives)
{
    const Mat3 g = chart.metric(u, s);
    const Mat2 gp = g.topLeftCorner<2, 2>();
    const Scalar a = g(2, 2) - 1 + d.dot(gp * d);
    const Scalar phi = std::sqrt(1 + a);
    Partials p;
    p.value = a / (phi + 1);
    if (derivatives)
    {
        p.dd = gp * d / phi;
        for (int i = 0; i < 2; ++i)
        {
            const Mat3 dg = fd::derivative([&](Scalar t) -> Mat3 { return chart.metric(u + t * Vec2::Unit(i), s); },
                                           kMetricStep);
            p.du[i] = (dg(2, 2) + d.dot(dg.topLeftCorner<2, 2>() * d)) / (2 * phi);
        }
    }
    return p;
}

// int_0^1 [u; 0]^T W(sigma u, s) [sigma d; 1] dsigma.
Partials flux_density(const CurlForm& curl, const quad::Rule& rule, const Vec2& u, Scalar s, const Vec2& d,
                      bool derivatives)
{
    Partials p;
    if (!derivatives && u.squaredNorm() == 0)
    {
        return p;
    }
    const Vec3 a(u.x(), u.y(), 0);
    for (std::size_t q = 0; q < rule.nodes.size(); ++q)
    {
        const Scalar sigma = rule.nodes[q];
        const Scalar w = rule.weights[q];
        const Vec3 b(sigma * d.x(), sigma * d.y(), 1);
        const Vec2 v = sigma * u;
        const Mat3 form = curl(v, s);
        p.value += w * a.dot(form * b);
        if (derivatives)
        {
            p.dd += w * sigma * (form.transpose() * a).head<2>();
            p.du += w * (form * b).head<2>();
            for (int i = 0; i < 2; ++i)
            {
                const Mat3 dform =
                    fd::derivative([&](Scalar t) -> Mat3 { return curl(v + t * Vec2::Unit(i), s); }, kMetricStep);
                p.du[i] += w * sigma * a.dot(dform * b);
            }
        }
    }
    return p;
}

Scalar length_excess(const SampledGraph& curve, const RatioContext& ctx, Displacements* gradient)
{
    const Scalar span = curve.nodes[curve.size() - 1] - curve.nodes[0];
    return element_sum(
               curve,
               [&](const Vec2& u, Scalar s, const Vec2& d, bool deriv) {
                   return length_excess_density(ctx.chart, u, s, d, deriv);
               },
               gradient) +
           (span - ctx.chart.length);
}

Scalar flux_excess(const SampledGraph& curve, const RatioContext& ctx, Displacements* gradient)
{
    const quad::Rule rule = quad::gauss_legendre(kSigmaPoints, 0, 1);
    return element_sum(
        curve,
        [&](const Vec2& u, Scalar s, const Vec2& d, bool deriv) {
            return flux_density(ctx.curl, rule, u, s, d, deriv);
        },
        gradient);
}

void check_curve(const SampledGraph& curve, const RatioContext& ctx, const char* what)
{
    curve.validate();
    require_inside(curve, ctx.chart.radius, what);
}

} // namespace

RatioContext make_ratio_context(TubeChart chart, AxisJet axis_jet, CurlForm curl, FieldJet field_jet, Scalar flux0)
{
    if (!(chart.length > 0))
    {
        throw DomainError("make_ratio_context: chart length must be positive");
    }
    const Scalar r0 = flux0 / chart.length;
    if (!(r0 > 0))
    {
        throw DomainError("make_ratio_context: R0 = flux0 / L0 must be positive, got " + std::to_string(r0));
    }
    return {std::move(chart), std::move(axis_jet), std::move(curl), std::move(field_jet), flux0, r0};
}

RatioContext ball_ratio_context(Scalar rho)
{
    BallChart ball = ball_chart(rho);
    BallField field = ball_field(rho);
    return make_ratio_context(std::move(ball.chart), std::move(ball.axis_jet), std::move(field.curl),
                              std::move(field.jet), field.flux0);
}

QFormSpec q_form_spec(const RatioContext& ctx)
{
    QFormSpec spec;
    spec.L0 = ctx.chart.length;
    spec.R0 = ctx.R0;
    spec.coefficients = [axis = ctx.axis_jet, field = ctx.field_jet](Scalar s) {
        QCoefficients c;
        c.g_axis = axis.g_axis(s);
        const Vec2 dg = axis.dg33(s);
        c.length_form = 0.25 * axis.d2g33(s) - 0.125 * dg * dg.transpose();
        c.curl_uv = field.dB0_uv(s);
        c.curl_gradient = field.ddB0_u_e3(s);
        return c;
    };
    return spec;
}

namespace
{
// Per-element blocks: Q restricted to one element is [u_k; u_k+1]^T E [u_k; u_k+1].
Eigen::Matrix4d q_element(const QCoefficients& ca, const QCoefficients& cb, Scalar h, Scalar L0, Scalar R0)
{
    Eigen::Matrix4d e = Eigen::Matrix4d::Zero();
    const Scalar scale = (2 * R0 / L0) * 0.5 * h;
    const QCoefficients* ends[2] = {&ca, &cb};
    // d = D [u_k; u_k+1], D = [-I, I] / h
    Eigen::Matrix<Scalar, 2, 4> D;
    D << -Mat2::Identity() / h, Mat2::Identity() / h;
    for (int j = 0; j < 2; ++j)
    {
        const QCoefficients& c = *ends[j];
        Eigen::Matrix<Scalar, 2, 4> P = Eigen::Matrix<Scalar, 2, 4>::Zero();
        P.block<2, 2>(0, 2 * j) = Mat2::Identity();
        Eigen::Matrix4d local = 0.5 * D.transpose() * c.g_axis * D;
        local += P.transpose() * (c.length_form - c.curl_gradient / (2 * R0)) * P;
        const Eigen::Matrix4d cross = -(c.curl_uv / (2 * R0)) * P.transpose() * kRotation * D;
        local += 0.5 * (cross + cross.transpose());
        e += scale * local;
    }
    return e;
}

} // namespace

QGrid q_grid(const QFormSpec& spec, const VecX& nodes)
{
    QGrid grid{spec.L0, spec.R0, nodes, {}};
    grid.coefficients.reserve(nodes.size());
    for (Eigen::Index k = 0; k < nodes.size(); ++k)
    {
        grid.coefficients.push_back(spec.coefficients(nodes[k]));
    }
    return grid;
}

Scalar q_form(const QGrid& grid, const Displacements& u, Displacements* gradient)
{
    const Eigen::Index n = grid.nodes.size();
    if (u.rows() != n)
    {
        throw ArgumentError("q_form: displacements do not match the grid");
    }
    if (gradient)
    {
        gradient->setZero(n, 2);
    }
    const Scalar inv2r = 1 / (2 * grid.R0);
    Scalar total = 0;
    for (Eigen::Index k = 0; k + 1 < n; ++k)
    {
        const Scalar h = grid.nodes[k + 1] - grid.nodes[k];
        const Scalar scale = (2 * grid.R0 / grid.L0) * 0.5 * h;
        const Vec2 d = (u.row(k + 1) - u.row(k)).transpose() / h;
        Vec2 through_d = Vec2::Zero();
        for (int j = 0; j < 2; ++j)
        {
            const QCoefficients& c = grid.coefficients[k + j];
            const Vec2 uj = u.row(k + j).transpose();
            const Mat2 potential = c.length_form - inv2r * c.curl_gradient;
            total += scale * (0.5 * d.dot(c.g_axis * d) + uj.dot(potential * uj) - inv2r * c.curl_uv * cross2(uj, d));
            if (gradient)
            {
                // u x d = u^T J d
                const Vec2 du = (potential + potential.transpose()) * uj - inv2r * c.curl_uv * kRotation * d;
                gradient->row(k + j) += scale * du.transpose();
                through_d += scale * (0.5 * (c.g_axis + c.g_axis.transpose()) * d -
                                      inv2r * c.curl_uv * kRotation.transpose() * uj);
            }
        }
        if (gradient)
        {
            gradient->row(k) -= through_d.transpose() / h;
            gradient->row(k + 1) += through_d.transpose() / h;
        }
    }
    return total;
}

Scalar q_form(const SampledGraph& u, const QFormSpec& spec)
{
    u.validate();
    return q_form(q_grid(spec, u.nodes), u.u);
}

SparseMatrix q_matrix(const QFormSpec& spec, const VecX& nodes)
{
    const Eigen::Index n = nodes.size();
    std::vector<Eigen::Triplet<Scalar>> triplets;
    triplets.reserve(16 * n);
    QCoefficients prev = spec.coefficients(nodes[0]);
    for (Eigen::Index k = 0; k + 1 < n; ++k)
    {
        const QCoefficients next = spec.coefficients(nodes[k + 1]);
        const Eigen::Matrix4d e = q_element(prev, next, nodes[k + 1] - nodes[k], spec.L0, spec.R0);
        for (int i = 0; i < 4; ++i)
        {
            for (int j = 0; j < 4; ++j)
            {
                triplets.emplace_back(2 * k + i, 2 * k + j, e(i, j));
            }
        }
        prev = next;
    }
    SparseMatrix m(dofs(n), dofs(n));
    m.setFromTriplets(triplets.begin(), triplets.end());
    return m;
}

SparseMatrix h1_gram(const QFormSpec& spec, const VecX& nodes)
{
    const Eigen::Index n = nodes.size();
    std::vector<Eigen::Triplet<Scalar>> triplets;
    triplets.reserve(16 * n);
    for (Eigen::Index k = 0; k + 1 < n; ++k)
    {
        const Scalar h = nodes[k + 1] - nodes[k];
        const Mat2 ga = spec.coefficients(nodes[k]).g_axis;
        const Mat2 gb = spec.coefficients(nodes[k + 1]).g_axis;
        const Mat2 stiff = 0.5 * h * (ga + gb) / (h * h);
        for (int i = 0; i < 2; ++i)
        {
            for (int j = 0; j < 2; ++j)
            {
                triplets.emplace_back(2 * k + i, 2 * k + j, stiff(i, j) + 0.5 * h * ga(i, j));
                triplets.emplace_back(2 * k + 2 + i, 2 * k + 2 + j, stiff(i, j) + 0.5 * h * gb(i, j));
                triplets.emplace_back(2 * k + i, 2 * k + 2 + j, -stiff(i, j));
                triplets.emplace_back(2 * k + 2 + i, 2 * k + j, -stiff(i, j));
            }
        }
    }
    SparseMatrix m(dofs(n), dofs(n));
    m.setFromTriplets(triplets.begin(), triplets.end());
    return m;
}

Scalar mean_length(const SampledGraph& curve, const TubeChart& chart)
{
    curve.validate();
    const VecX w = quad::trapezoid_weights(curve.nodes);
    Scalar total = 0;
    for (Eigen::Index k = 0; k < curve.size(); ++k)
    {
        total += w[k] * std::sqrt(chart.g33(curve.at(k), curve.nodes[k]));
    }
    return total;
}

Scalar ratio(const SampledGraph& curve, const RatioContext& ctx)
{
    check_curve(curve, ctx, "ratio");
    const Scalar length = ctx.chart.length + length_excess(curve, ctx, nullptr);
    if (!(length > 0))
    {
        throw DomainError("ratio: curve has zero length");
    }
    return (ctx.flux0 + flux_excess(curve, ctx, nullptr)) / length;
}

Scalar ratio_excess(const SampledGraph& curve, const RatioContext& ctx)
{
    check_curve(curve, ctx, "ratio_excess");
    const Scalar L0 = ctx.chart.length;
    const Scalar dl = length_excess(curve, ctx, nullptr);
    const Scalar df = flux_excess(curve, ctx, nullptr);
    if (!(L0 + dl > 0))
    {
        throw DomainError("ratio_excess: curve has zero length");
    }
    return (L0 * df - ctx.flux0 * dl) / ((L0 + dl) * L0);
}

Displacements ratio_gradient(const SampledGraph& curve, const RatioContext& ctx)
{
    check_curve(curve, ctx, "ratio_gradient");
    const Scalar L0 = ctx.chart.length;
    Displacements gl, gf;
    const Scalar dl = length_excess(curve, ctx, &gl);
    const Scalar df = flux_excess(curve, ctx, &gf);
    const Scalar length = L0 + dl;
    const Scalar excess = (L0 * df - ctx.flux0 * dl) / (length * L0);
    return (L0 * gf - ctx.flux0 * gl) / (length * L0) - excess * gl / length;
}

Scalar criticality_residual(const RatioContext& ctx, const std::vector<Scalar>& s_samples,
                            const std::vector<Vec2>& directions)
{
    Scalar worst = 0;
    for (Scalar s : s_samples)
    {
        const Vec2 form = ctx.field_jet.dB0_u_e3(s) - 0.5 * ctx.R0 * ctx.axis_jet.dg33(s);
        for (const Vec2& u : directions)
        {
            worst = std::max(worst, std::abs(form.dot(u)));
        }
    }
    return worst;
}

namespace
{
VecX generalized_eigenvalues(const QFormSpec& spec, const VecX& nodes)
{
    const MatX k = MatX(q_matrix(spec, nodes));
    const MatX b = MatX(h1_gram(spec, nodes));
    const Scalar asym = (k - k.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-12 * std::max(Scalar(1), k.cwiseAbs().maxCoeff()))
    {
        throw ConsistencyError("q_spectrum: assembled Q matrix is not symmetric (defect " + std::to_string(asym) + ")");
    }
    if (Eigen::LLT<MatX>(b).info() != Eigen::Success)
    {
        throw ConsistencyError("q_spectrum: H^1 Gram matrix is not positive definite");
    }
    Eigen::GeneralizedSelfAdjointEigenSolver<MatX> solver(k, b, Eigen::EigenvaluesOnly | Eigen::Ax_lBx);
    if (solver.info() != Eigen::Success)
    {
        throw ConsistencyError("q_spectrum: generalized eigensolver failed");
    }
    return solver.eigenvalues();
}

} // namespace

QSpectrum q_spectrum(const QFormSpec& spec, Eigen::Index basis_size)
{
    if (basis_size < 4)
    {
        throw ArgumentError("q_spectrum: basis size must be at least 4");
    }
    QSpectrum out;
    out.basis_size = basis_size;
    out.eigenvalues = generalized_eigenvalues(spec, uniform_nodes(spec.L0, basis_size));
    out.lambda_min = out.eigenvalues.minCoeff();
    out.lambda_max = out.eigenvalues.maxCoeff();
    out.alpha_Q = out.lambda_max;
    out.refined_basis_size = 2 * basis_size - 1;
    out.refined_eigenvalues = generalized_eigenvalues(spec, uniform_nodes(spec.L0, out.refined_basis_size));
    out.refined_lambda_min = out.refined_eigenvalues.minCoeff();
    out.refined_lambda_max = out.refined_eigenvalues.maxCoeff();
    return out;
}

Scalar ball_hessian_closed_form(const VecX& z, const VecX& x, const VecX& theta, Scalar rho)
{
    if (z.size() < 2 || x.size() != z.size() || theta.size() != z.size())
    {
        throw ArgumentError("ball_hessian_closed_form: x and theta must be sampled on the z grid");
    }
    // Exact for the piecewise-linear interpolants (degree <= 6 per element).
    const quad::Rule rule = quad::gauss_legendre(4);
    Scalar total = 0;
    for (Eigen::Index k = 0; k + 1 < z.size(); ++k)
    {
        const Scalar h = z[k + 1] - z[k];
        if (!(h > 0))
        {
            throw ArgumentError("ball_hessian_closed_form: z grid must be strictly increasing");
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
                     (w * w * (dx * dx + xx * xx * dtheta * dtheta) + xx * xx * w * (1 + 3 * zz * zz));
        }
    }
    return -rho * rho / 12 * total;
}

Scalar q_ell(const SampledGraph& curve, Scalar ell, const RatioContext& ctx)
{
    if (!(ell > 0 && ell <= 1))
    {
        throw ArgumentError("q_ell: ell must lie in (0, 1]");
    }
    curve.validate();
    require_inside(curve, 0.5 * ctx.chart.radius, "q_ell (half tube)");
    const Scalar inv = 1 / (ell * ell);
    // |Gamma|_g~ - <Gamma>
    const Scalar stretched = element_sum(
        curve,
        [&](const Vec2& u, Scalar s, const Vec2& d, bool) {
            const Mat3 g = ctx.chart.metric(u, s);
            const Scalar a = inv * d.dot(g.topLeftCorner<2, 2>() * d);
            const Scalar root = std::sqrt(g(2, 2));
            return Partials{a / (std::sqrt(g(2, 2) + a) + root), {}, {}};
        },
        nullptr);
    // <Gamma> - L0
    const VecX w = quad::trapezoid_weights(curve.nodes);
    Scalar mean = curve.nodes[curve.size() - 1] - curve.nodes[0] - ctx.chart.length;
    for (Eigen::Index k = 0; k < curve.size(); ++k)
    {
        const Scalar g33 = ctx.chart.g33(curve.at(k), curve.nodes[k]);
        mean += w[k] * (g33 - 1) / (std::sqrt(g33) + 1);
    }
    return ell * ell * stretched + mean - flux_excess(curve, ctx, nullptr) / ctx.R0;
}

MaximizeResult maximize_ratio(const SampledGraph& initial, const RatioContext& ctx, const MaximizeOptions& options)
{
    check_curve(initial, ctx, "maximize_ratio");
    const VecX nodes = initial.nodes;
    const Eigen::Index n = nodes.size();
    const VecX weights = quad::trapezoid_weights(nodes);
    const Scalar limit = options.clip_fraction * ctx.chart.radius;
    const auto graph = [&](const VecX& x) { return SampledGraph{nodes, unflatten(x)}; };

    const opt::Objective objective = [&](const VecX& x) -> std::optional<opt::Evaluation> {
        const SampledGraph g = graph(x);
        const Scalar value = -ratio_excess(g, ctx) / ctx.R0;
        return opt::Evaluation{value, -flatten(ratio_gradient(g, ctx)) / ctx.R0};
    };

    // H^1 preconditioner built from the axis metric.
    std::vector<Eigen::Triplet<Scalar>> triplets;
    const Scalar L0 = ctx.chart.length;
    for (Eigen::Index k = 0; k + 1 < n; ++k)
    {
        const Scalar h = nodes[k + 1] - nodes[k];
        const Mat2 g = 0.5 * (ctx.axis_jet.g_axis(nodes[k]) + ctx.axis_jet.g_axis(nodes[k + 1]));
        for (int i = 0; i < 2; ++i)
        {
            for (int j = 0; j < 2; ++j)
            {
                const Scalar stiff = g(i, j) / h;
                const Scalar mass = 0.5 * h * g(i, j) / (L0 * L0);
                triplets.emplace_back(2 * k + i, 2 * k + j, stiff + mass);
                triplets.emplace_back(2 * k + 2 + i, 2 * k + 2 + j, stiff + mass);
                triplets.emplace_back(2 * k + i, 2 * k + 2 + j, -stiff);
                triplets.emplace_back(2 * k + 2 + i, 2 * k + j, -stiff);
            }
        }
    }
    SparseMatrix h1(dofs(n), dofs(n));
    h1.setFromTriplets(triplets.begin(), triplets.end());
    Eigen::SimplicialLDLT<SparseMatrix> factor(h1);
    if (factor.info() != Eigen::Success)
    {
        throw ConsistencyError("maximize_ratio: preconditioner factorization failed");
    }

    MaximizeResult result;
    opt::LbfgsHooks hooks;
    hooks.gradient_norm = [&](const VecX&, const VecX& gradient) {
        Scalar worst = 0;
        for (Eigen::Index k = 0; k < n; ++k)
        {
            worst = std::max(worst, gradient.segment<2>(2 * k).cwiseAbs().maxCoeff() / weights[k]);
        }
        return worst;
    };
    hooks.preconditioner = [&](const VecX& v) -> VecX { return factor.solve(v); };
    hooks.projection = [&](const VecX& x) -> VecX {
        VecX y = x;
        for (Eigen::Index k = 0; k < n; ++k)
        {
            const Scalar r = y.segment<2>(2 * k).norm();
            if (r > limit)
            {
                y.segment<2>(2 * k) *= limit / r;
                result.truncated = true;
            }
        }
        return y;
    };
    hooks.observer = [&](int iteration, const VecX&, Scalar value, Scalar gnorm) {
        result.trace.push_back({iteration, ctx.R0 * (1 - value), gnorm});
    };
    opt::LbfgsOptions lopts;
    lopts.tolerance = options.tolerance;
    lopts.max_iter = options.max_iter;
    const opt::LbfgsResult r = opt::minimize_lbfgs(objective, flatten(initial.u), lopts, hooks);
    result.curve = graph(r.x);
    result.ratio = ratio(result.curve, ctx);
    result.gradient_norm = r.gradient_norm;
    result.iterations = r.iterations;
    result.status = r.status;
    return result;
}

} // namespace vfe
