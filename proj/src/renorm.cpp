#include "vfe/renorm.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <string>

#include <Eigen/SparseCholesky>

#include "vfe/errors.hpp"
#include "vfe/quadrature.hpp"

namespace vfe
{
namespace
{
constexpr Scalar kSeparationGuard = 1e-8;

VecX flatten_curve(const Displacements& u)
{
    VecX x(2 * u.rows());
    for (Eigen::Index k = 0; k < u.rows(); ++k)
    {
        x.segment<2>(2 * k) = u.row(k).transpose();
    }
    return x;
}

VecX flatten_family(const FilamentFamily& f)
{
    const Eigen::Index block = 2 * f.nodes.size();
    VecX x(block * f.size());
    for (int i = 0; i < f.size(); ++i)
    {
        x.segment(i * block, block) = flatten_curve(f.curves[i]);
    }
    return x;
}

void unflatten_family(const VecX& x, FilamentFamily& f)
{
    const Eigen::Index n = f.nodes.size();
    for (int i = 0; i < f.size(); ++i)
    {
        for (Eigen::Index k = 0; k < n; ++k)
        {
            f.curves[i].row(k) = x.segment<2>(2 * (i * n + k)).transpose();
        }
    }
}

bool is_clamped(const FilamentFamily& f, Eigen::Index k)
{
    return f.endpoints == EndpointMode::clamped && (k == 0 || k == f.nodes.size() - 1);
}

std::vector<Mat2> axis_metrics(const QFormSpec& spec, const VecX& nodes)
{
    std::vector<Mat2> g(nodes.size());
    for (Eigen::Index k = 0; k < nodes.size(); ++k)
    {
        g[k] = spec.coefficients(nodes[k]).g_axis;
    }
    return g;
}

struct Evaluated
{
    WnValue value;
    std::vector<Displacements> gradient;
};

Evaluated evaluate(const FilamentFamily& family, const QFormSpec& spec, bool with_gradient)
{
    family.validate();
    const int N = family.size();
    const Eigen::Index n = family.nodes.size();
    const QGrid grid = q_grid(spec, family.nodes);
    const VecX w = quad::trapezoid_weights(family.nodes);
    const Scalar prefactor = pi * spec.L0 * N;

    Evaluated out;
    if (with_gradient)
    {
        out.gradient.assign(N, Displacements::Zero(n, 2));
    }
    Displacements dq;
    for (int i = 0; i < N; ++i)
    {
        out.value.confinement += prefactor * q_form(grid, family.curves[i], with_gradient ? &dq : nullptr);
        if (with_gradient)
        {
            out.gradient[i] += prefactor * dq;
        }
    }
    for (Eigen::Index k = 0; k < n; ++k)
    {
        for (int i = 0; i < N; ++i)
        {
            for (int j = i + 1; j < N; ++j)
            {
                const Vec2 v = family.curves[i].row(k).transpose() - family.curves[j].row(k).transpose();
                const Scalar d2 = v.dot(grid.coefficients[k].g_axis * v);
                if (!(d2 > 0))
                {
                    throw InfiniteEnergyError(i, j, static_cast<int>(k));
                }
                // Ordered pairs: (i, j) and (j, i) each contribute log |v|.
                out.value.interaction -= pi * w[k] * std::log(d2);
                if (with_gradient)
                {
                    const Vec2 force = -2 * pi * w[k] * grid.coefficients[k].g_axis * v / d2;
                    out.gradient[i].row(k) += force.transpose();
                    out.gradient[j].row(k) -= force.transpose();
                }
            }
        }
    }
    out.value.total = out.value.confinement + out.value.interaction;
    return out;
}

} // namespace

void FilamentFamily::validate() const
{
    if (curves.empty())
    {
        throw ArgumentError("FilamentFamily: at least one curve required");
    }
    if (nodes.size() < 2)
    {
        throw ArgumentError("FilamentFamily: at least two grid nodes required");
    }
    for (std::size_t i = 0; i < curves.size(); ++i)
    {
        if (curves[i].rows() != nodes.size())
        {
            throw ArgumentError("FilamentFamily: curve " + std::to_string(i) + " is not sampled on the shared grid");
        }
        if (!curves[i].allFinite())
        {
            throw ArgumentError("FilamentFamily: curve " + std::to_string(i) + " has non-finite values");
        }
    }
    for (Eigen::Index k = 1; k < nodes.size(); ++k)
    {
        if (!(nodes[k] > nodes[k - 1]))
        {
            throw ArgumentError("FilamentFamily: grid not strictly increasing at node " + std::to_string(k));
        }
    }
}

WnValue wn_energy(const FilamentFamily& family, const QFormSpec& spec) { return evaluate(family, spec, false).value; }

std::vector<Displacements> wn_gradient(const FilamentFamily& family, const QFormSpec& spec)
{
    return evaluate(family, spec, true).gradient;
}

Scalar min_separation(const FilamentFamily& family, const QFormSpec& spec)
{
    const std::vector<Mat2> g = axis_metrics(spec, family.nodes);
    Scalar best = std::numeric_limits<Scalar>::infinity();
    for (Eigen::Index k = 0; k < family.nodes.size(); ++k)
    {
        for (int i = 0; i < family.size(); ++i)
        {
            for (int j = i + 1; j < family.size(); ++j)
            {
                const Vec2 v = family.curves[i].row(k).transpose() - family.curves[j].row(k).transpose();
                best = std::min(best, std::sqrt(std::max(v.dot(g[k] * v), Scalar(0))));
            }
        }
    }
    return best;
}

Scalar el_residual(const FilamentFamily& family, const QFormSpec& spec)
{
    const std::vector<Displacements> grad = wn_gradient(family, spec);
    const VecX w = quad::trapezoid_weights(family.nodes);
    Scalar worst = 0;
    for (const Displacements& gi : grad)
    {
        for (Eigen::Index k = 0; k < family.nodes.size(); ++k)
        {
            if (!is_clamped(family, k))
            {
                worst = std::max(worst, gi.row(k).cwiseAbs().maxCoeff() / w[k]);
            }
        }
    }
    return worst;
}

QFormSpec isotropic_spec(Scalar L0)
{
    QFormSpec spec;
    spec.L0 = L0;
    spec.R0 = L0 / 2;
    spec.coefficients = [](Scalar) {
        QCoefficients c;
        c.length_form = 0.5 * Mat2::Identity();
        return c;
    };
    return spec;
}

QFormSpec kinetic_spec(Scalar L0)
{
    QFormSpec spec;
    spec.L0 = L0;
    spec.R0 = L0 / 2;
    spec.coefficients = [](Scalar) { return QCoefficients{}; };
    return spec;
}

FilamentFamily polygon_family(int N, const VecX& nodes, Scalar radius, EndpointMode endpoints)
{
    FilamentFamily f;
    f.nodes = nodes;
    f.endpoints = endpoints;
    for (int i = 0; i < N; ++i)
    {
        const Scalar a = 2 * pi * i / N;
        Displacements u(nodes.size(), 2);
        u.col(0).setConstant(radius * std::cos(a));
        u.col(1).setConstant(radius * std::sin(a));
        f.curves.push_back(u);
    }
    return f;
}

Scalar polygon_radius(int N, const QFormSpec& spec, const VecX& nodes)
{
    if (N <= 1)
    {
        return 0;
    }
    const SparseMatrix K = q_matrix(spec, nodes);
    Scalar q = 0;
    for (int c = 0; c < 2; ++c)
    {
        VecX x = VecX::Zero(2 * nodes.size());
        for (Eigen::Index k = 0; k < nodes.size(); ++k)
        {
            x[2 * k + c] = 1;
        }
        q += 0.5 * x.dot(K * x);
    }
    if (!(q > 0))
    {
        // Pure kinetic confinement has no preferred radius; fall back to unit order.
        return 0.5;
    }
    return std::sqrt((N - 1) / (2.0 * N * q));
}

WnResult wn_minimize(int N, const QFormSpec& spec, const WnOptions& options)
{
    if (N < 1)
    {
        throw ArgumentError("wn_minimize: N must be at least 1");
    }
    FilamentFamily family;
    if (options.initial)
    {
        family = *options.initial;
        family.validate();
        if (family.size() != N)
        {
            throw ArgumentError("wn_minimize: initial family has " + std::to_string(family.size()) + " curves, expected " +
                                std::to_string(N));
        }
        family.endpoints = options.endpoints;
    }
    else
    {
        const VecX nodes = uniform_nodes(spec.L0, options.nodes);
        const Scalar radius = options.radius.value_or(polygon_radius(N, spec, nodes));
        family = polygon_family(N, nodes, radius, options.endpoints);
        std::mt19937_64 rng(options.seed);
        std::uniform_real_distribution<Scalar> unit(-1, 1);
        for (Displacements& u : family.curves)
        {
            for (Eigen::Index k = 0; k < nodes.size(); ++k)
            {
                const Vec2 kick(unit(rng), unit(rng));
                if (!is_clamped(family, k))
                {
                    u.row(k) += options.noise * kick.transpose();
                }
            }
        }
    }
    (void)wn_energy(family, spec); // surfaces InfiniteEnergyError for a bad start

    const Eigen::Index n = family.nodes.size();
    const Eigen::Index block = 2 * n;
    const VecX w = quad::trapezoid_weights(family.nodes);
    const VecX x0 = flatten_family(family);
    FilamentFamily work = family;

    const auto clamp_mask = [&](VecX& v) {
        if (family.endpoints != EndpointMode::clamped)
        {
            return;
        }
        for (int i = 0; i < N; ++i)
        {
            v.segment<2>(i * block).setZero();
            v.segment<2>(i * block + block - 2).setZero();
        }
    };

    const opt::Objective objective = [&](const VecX& x) -> std::optional<opt::Evaluation> {
        unflatten_family(x, work);
        if (N > 1 && !(min_separation(work, spec) >= kSeparationGuard))
        {
            return std::nullopt;
        }
        const Evaluated e = evaluate(work, spec, true);
        VecX g(x.size());
        for (int i = 0; i < N; ++i)
        {
            g.segment(i * block, block) = flatten_curve(e.gradient[i]);
        }
        clamp_mask(g);
        return opt::Evaluation{e.value.total, g};
    };

    // Per-curve H^1 preconditioner; clamped nodes get identity rows.
    std::vector<Eigen::Triplet<Scalar>> triplets;
    const std::vector<Mat2> g = axis_metrics(spec, family.nodes);
    const auto fixed = [&](Eigen::Index k) { return is_clamped(family, k); };
    for (Eigen::Index k = 0; k + 1 < n; ++k)
    {
        const Scalar h = family.nodes[k + 1] - family.nodes[k];
        const Mat2 gm = 0.5 * (g[k] + g[k + 1]);
        for (int a = 0; a < 2; ++a)
        {
            for (int b = 0; b < 2; ++b)
            {
                const Scalar stiff = gm(a, b) / h;
                const Scalar mass = 0.5 * h * gm(a, b) / (spec.L0 * spec.L0);
                if (!fixed(k))
                    triplets.emplace_back(2 * k + a, 2 * k + b, stiff + mass);
                if (!fixed(k + 1))
                    triplets.emplace_back(2 * k + 2 + a, 2 * k + 2 + b, stiff + mass);
                if (!fixed(k) && !fixed(k + 1))
                {
                    triplets.emplace_back(2 * k + a, 2 * k + 2 + b, -stiff);
                    triplets.emplace_back(2 * k + 2 + a, 2 * k + b, -stiff);
                }
            }
        }
    }
    for (Eigen::Index k : {Eigen::Index(0), n - 1})
    {
        if (fixed(k))
        {
            triplets.emplace_back(2 * k, 2 * k, 1.0);
            triplets.emplace_back(2 * k + 1, 2 * k + 1, 1.0);
        }
    }
    SparseMatrix h1(block, block);
    h1.setFromTriplets(triplets.begin(), triplets.end());
    Eigen::SimplicialLDLT<SparseMatrix> factor(h1);
    if (factor.info() != Eigen::Success)
    {
        throw ConsistencyError("wn_minimize: preconditioner factorization failed");
    }

    WnResult result;
    opt::LbfgsHooks hooks;
    hooks.gradient_norm = [&](const VecX&, const VecX& grad) {
        Scalar worst = 0;
        for (int i = 0; i < N; ++i)
        {
            for (Eigen::Index k = 0; k < n; ++k)
            {
                worst = std::max(worst, grad.segment<2>(i * block + 2 * k).cwiseAbs().maxCoeff() / w[k]);
            }
        }
        return worst;
    };
    hooks.preconditioner = [&](const VecX& v) -> VecX {
        VecX out(v.size());
        for (int i = 0; i < N; ++i)
        {
            out.segment(i * block, block) = factor.solve(v.segment(i * block, block));
        }
        clamp_mask(out);
        return out;
    };
    if (family.endpoints == EndpointMode::clamped)
    {
        hooks.projection = [&](const VecX& x) -> VecX {
            VecX y = x;
            for (int i = 0; i < N; ++i)
            {
                y.segment<2>(i * block) = x0.segment<2>(i * block);
                y.segment<2>(i * block + block - 2) = x0.segment<2>(i * block + block - 2);
            }
            return y;
        };
    }
    hooks.observer = [&](int iteration, const VecX& x, Scalar value, Scalar gnorm) {
        unflatten_family(x, work);
        result.trace.push_back({iteration, value, gnorm, min_separation(work, spec)});
    };
    opt::LbfgsOptions lopts;
    lopts.tolerance = options.tolerance;
    lopts.max_iter = options.max_iter;
    lopts.max_backtracks = 50;
    const opt::LbfgsResult r = opt::minimize_lbfgs(objective, x0, lopts, hooks);

    result.family = family;
    unflatten_family(r.x, result.family);
    if (r.status == opt::Status::stagnated)
    {
        throw StagnationError("wn_minimize: line search failed to decrease W_N (gradient norm " +
                                  std::to_string(r.gradient_norm) + ")",
                              result.family);
    }
    result.value = wn_energy(result.family, spec);
    result.gradient_norm = r.gradient_norm;
    result.iterations = r.iterations;
    result.status = r.status;
    return result;
}

} // namespace vfe
