#include "vfe/profile.hpp"

#include <Eigen/SparseLU>
#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>
#include <string>

#include "vfe/errors.hpp"
#include "vfe/quadrature.hpp"

namespace vfe
{
namespace
{
// Fourth-order central stencils at offsets -2..2, before dividing by 12 h^2 and 12 h.
constexpr std::array<Scalar, 5> kSecond{-1, 16, -30, 16, -1};
constexpr std::array<Scalar, 5> kFirst{1, -8, 0, 8, -1};

Scalar far_field(Scalar r) { return 1 - 1 / (2 * r * r); }

// f on the extended grid: odd reflection through r = 0, far-field closure past R_max.
Scalar extended(const VecX& f, Eigen::Index j, Scalar h)
{
    const Eigen::Index n = f.size();
    if (j < 0)
    {
        return -f[-j];
    }
    if (j >= n)
    {
        return far_field(static_cast<Scalar>(j) * h);
    }
    return f[j];
}

VecX residual(const VecX& f, Scalar h)
{
    const Eigen::Index n = f.size();
    VecX res = VecX::Zero(n);
    for (Eigen::Index i = 1; i + 1 < n; ++i)
    {
        const Scalar r = static_cast<Scalar>(i) * h;
        Scalar d2 = 0;
        Scalar d1 = 0;
        for (int o = -2; o <= 2; ++o)
        {
            const Scalar v = extended(f, i + o, h);
            d2 += kSecond[o + 2] * v;
            d1 += kFirst[o + 2] * v;
        }
        d2 /= 12 * h * h;
        d1 /= 12 * h;
        res[i] = d2 + d1 / r - f[i] / (r * r) + f[i] * (1 - f[i] * f[i]);
    }
    return res;
}

// Jacobian over the interior unknowns 1..n-2 (row/column i-1).
SparseMatrix jacobian(const VecX& f, Scalar h)
{
    const Eigen::Index n = f.size();
    std::vector<Eigen::Triplet<Scalar>> triplets;
    triplets.reserve(5 * n);
    for (Eigen::Index i = 1; i + 1 < n; ++i)
    {
        const Scalar r = static_cast<Scalar>(i) * h;
        for (int o = -2; o <= 2; ++o)
        {
            Scalar a = kSecond[o + 2] / (12 * h * h) + kFirst[o + 2] / (12 * h * r);
            if (o == 0)
            {
                a += -1 / (r * r) + 1 - 3 * f[i] * f[i];
            }
            Eigen::Index j = i + o;
            if (j < 0)
            {
                j = -j;
                a = -a;
            }
            if (j >= 1 && j + 1 < n)
            {
                triplets.emplace_back(i - 1, j - 1, a);
            }
        }
    }
    SparseMatrix J(n - 2, n - 2);
    J.setFromTriplets(triplets.begin(), triplets.end());
    return J;
}

Eigen::Index panel_of(const RadialProfile& p, Scalar r)
{
    const Eigen::Index n = p.r_nodes.size();
    const Scalar h = p.r_nodes[1] - p.r_nodes[0];
    return std::clamp<Eigen::Index>(static_cast<Eigen::Index>(std::floor(r / h)), 0, n - 2);
}

void require_range(const RadialProfile& p, Scalar r, const char* what)
{
    if (!(r >= 0) || r > p.R_max() * (1 + 1e-14))
    {
        std::ostringstream msg;
        msg << what << ": radius " << r << " outside the profile range [0, " << p.R_max() << "]";
        throw DomainError(msg.str());
    }
}

// Integrates integrand(r, f, f') over [0, R] with 4-point Gauss-Legendre on each grid panel.
template <typename F>
Scalar integrate_profile(const RadialProfile& p, Scalar R, F&& integrand)
{
    static const quad::Rule rule = quad::gauss_legendre(4);
    Scalar total = 0;
    for (Eigen::Index k = 0; k + 1 < p.r_nodes.size() && p.r_nodes[k] < R; ++k)
    {
        const Scalar a = p.r_nodes[k];
        const Scalar b = std::min(p.r_nodes[k + 1], R);
        const Scalar half = 0.5 * (b - a);
        for (std::size_t q = 0; q < rule.nodes.size(); ++q)
        {
            const Scalar r = a + half * (1 + rule.nodes[q]);
            total += half * rule.weights[q] * integrand(r, p.value(r), p.derivative(r));
        }
    }
    return total;
}
} // namespace

Scalar RadialProfile::value(Scalar r) const
{
    require_range(*this, r, "RadialProfile::value");
    const Eigen::Index k = panel_of(*this, r);
    const Scalar h = r_nodes[k + 1] - r_nodes[k];
    const Scalar t = (r - r_nodes[k]) / h;
    const Scalar t2 = t * t;
    const Scalar t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * f_values[k] + (t3 - 2 * t2 + t) * h * df_values[k] +
           (-2 * t3 + 3 * t2) * f_values[k + 1] + (t3 - t2) * h * df_values[k + 1];
}

Scalar RadialProfile::derivative(Scalar r) const
{
    require_range(*this, r, "RadialProfile::derivative");
    const Eigen::Index k = panel_of(*this, r);
    const Scalar h = r_nodes[k + 1] - r_nodes[k];
    const Scalar t = (r - r_nodes[k]) / h;
    const Scalar t2 = t * t;
    return ((6 * t2 - 6 * t) * f_values[k] + (-6 * t2 + 6 * t) * f_values[k + 1]) / h +
           (3 * t2 - 4 * t + 1) * df_values[k] + (3 * t2 - 2 * t) * df_values[k + 1];
}

RadialProfile solve_f0(Scalar R_max, int node_count)
{
    if (!(R_max >= 20))
    {
        throw ArgumentError("solve_f0: R_max must be at least 20");
    }
    if (node_count < 2000)
    {
        throw ArgumentError("solve_f0: node_count must be at least 2000");
    }
    const Eigen::Index n = node_count;
    const Scalar h = R_max / static_cast<Scalar>(n - 1);
    RadialProfile p;
    p.r_nodes = VecX::LinSpaced(n, 0, R_max);
    VecX f(n);
    for (Eigen::Index i = 0; i < n; ++i)
    {
        const Scalar r = p.r_nodes[i];
        f[i] = r / std::sqrt(r * r + 2);
    }
    f[n - 1] = far_field(R_max);

    VecX res = residual(f, h);
    Scalar norm = res.lpNorm<Eigen::Infinity>();
    std::vector<Scalar> history{norm};
    Eigen::SparseLU<SparseMatrix> lu;
    int iter = 0;
    for (; iter < 60 && norm > 1e-11; ++iter)
    {
        const SparseMatrix J = jacobian(f, h);
        lu.compute(J);
        if (lu.info() != Eigen::Success)
        {
            throw ConvergenceError("solve_f0: singular Newton matrix");
        }
        const VecX step = lu.solve(res.segment(1, n - 2));
        Scalar lambda = 1;
        bool accepted = false;
        while (lambda > 1e-4)
        {
            VecX trial = f;
            trial.segment(1, n - 2) -= lambda * step;
            const VecX trial_res = residual(trial, h);
            const Scalar trial_norm = trial_res.lpNorm<Eigen::Infinity>();
            if (trial_norm < norm)
            {
                f = trial;
                res = trial_res;
                norm = trial_norm;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        history.push_back(norm);
        if (!accepted)
        {
            break;
        }
    }
    if (!(norm < 1e-8))
    {
        std::ostringstream msg;
        msg << "solve_f0: Newton stalled; residual history:";
        for (Scalar v : history)
        {
            msg << ' ' << v;
        }
        throw ConvergenceError(msg.str());
    }

    p.f_values = f;
    p.df_values.resize(n);
    for (Eigen::Index i = 0; i < n; ++i)
    {
        Scalar d1 = 0;
        for (int o = -2; o <= 2; ++o)
        {
            d1 += kFirst[o + 2] * extended(f, i + o, h);
        }
        p.df_values[i] = d1 / (12 * h);
    }
    p.residual = norm;
    p.newton_iterations = iter;
    return p;
}

Scalar gamma_from_profile(const RadialProfile& profile, Scalar R)
{
    require_range(profile, R, "gamma_from_profile");
    if (!(R > 0))
    {
        throw DomainError("gamma_from_profile: R must be positive");
    }
    const Scalar I = 0.5 * integrate_profile(profile, R, [](Scalar r, Scalar f, Scalar df) {
                         const Scalar w = 1 - f * f;
                         return (df * df + f * f / (r * r) + 0.5 * w * w) * r;
                     });
    return 2 * pi * I - pi * std::log(R);
}

Scalar disk_vortex_energy(Scalar eps, Scalar r_eps, const RadialProfile& profile)
{
    if (!(eps > 0) || !(r_eps > 0))
    {
        throw DomainError("disk_vortex_energy: eps and r_eps must be positive");
    }
    const Scalar R = r_eps / eps;
    require_range(profile, R, "disk_vortex_energy");
    const Scalar F = profile.value(R);
    const Scalar F2 = F * F;
    return 2 * pi * integrate_profile(profile, R, [F2](Scalar s, Scalar f, Scalar df) {
               const Scalar w = 1 - f * f / F2;
               return (df * df / F2 + f * f / (s * s * F2) + 0.5 * w * w) * s;
           });
}

PerforatedCheck perforated_renormalized_check(const std::vector<Vec2>& points, Scalar delta, Scalar r,
                                              const PerforatedOptions& options)
{
    const std::size_t N = points.size();
    if (N == 0)
    {
        throw ArgumentError("perforated_renormalized_check: no points");
    }
    if (!(delta > 0) || !(r > 0))
    {
        throw ArgumentError("perforated_renormalized_check: delta and r must be positive");
    }
    // Patch radius around each point: annuli are disjoint and stay inside D(0, delta).
    std::vector<Scalar> patch(N);
    for (std::size_t i = 0; i < N; ++i)
    {
        Scalar room = delta - points[i].norm() - r;
        if (!(room > 0))
        {
            throw DomainError("perforated_renormalized_check: disk " + std::to_string(i) +
                              " is not inside D(0, delta)");
        }
        for (std::size_t j = 0; j < N; ++j)
        {
            if (j == i)
            {
                continue;
            }
            const Scalar gap = (points[i] - points[j]).norm();
            if (!(gap > 2 * r))
            {
                throw DomainError("perforated_renormalized_check: disks " + std::to_string(i) + " and " +
                                  std::to_string(j) + " overlap");
            }
            room = std::min(room, gap - 2 * r);
        }
        patch[i] = r + 0.45 * room;
    }

    const auto field_sq = [&](const Vec2& x) {
        Vec2 v = Vec2::Zero();
        for (const Vec2& p : points)
        {
            const Vec2 d = p - x;
            v += Vec2(-d.y(), d.x()) / d.squaredNorm();
        }
        return v.squaredNorm();
    };

    quad::AdaptiveOptions inner;
    inner.rel_tol = options.tolerance;
    inner.abs_tol = 1e-3 * options.tolerance;
    const quad::AdaptiveOptions outer = inner;

    Scalar energy = 0;
    // Annuli r < |x - x_i| < patch_i in (log t, theta): the integrand t^2 |v|^2 is smooth.
    for (std::size_t i = 0; i < N; ++i)
    {
        const Vec2 c = points[i];
        const auto ring = [&](Scalar theta) {
            const Vec2 e(std::cos(theta), std::sin(theta));
            return quad::integrate(
                       [&](Scalar sigma) {
                           const Scalar t = std::exp(sigma);
                           return t * t * field_sq(c + t * e);
                       },
                       std::log(r), std::log(patch[i]), inner)
                .value;
        };
        energy += quad::integrate(ring, 0, 2 * pi, outer).value;
    }

    // Background: polar rays from the origin with the patch disks cut out.
    std::vector<Scalar> breaks{0, 2 * pi};
    for (std::size_t i = 0; i < N; ++i)
    {
        const Scalar dist = points[i].norm();
        if (dist > patch[i])
        {
            const Scalar center = std::atan2(points[i].y(), points[i].x());
            const Scalar half = std::asin(patch[i] / dist);
            for (Scalar a : {center - half, center + half})
            {
                breaks.push_back(a - 2 * pi * std::floor(a / (2 * pi)));
            }
        }
    }
    std::sort(breaks.begin(), breaks.end());
    const auto ray = [&](Scalar phi) {
        const Vec2 e(std::cos(phi), std::sin(phi));
        std::vector<std::pair<Scalar, Scalar>> cuts;
        for (std::size_t i = 0; i < N; ++i)
        {
            const Scalar b = e.dot(points[i]);
            const Scalar disc = b * b - points[i].squaredNorm() + patch[i] * patch[i];
            if (disc > 0)
            {
                const Scalar root = std::sqrt(disc);
                cuts.emplace_back(std::max<Scalar>(0, b - root), std::min(delta, b + root));
            }
        }
        std::sort(cuts.begin(), cuts.end());
        const auto radial = [&](Scalar s) { return s * field_sq(s * e); };
        Scalar total = 0;
        Scalar start = 0;
        for (const auto& [lo, hi] : cuts)
        {
            if (lo > start)
            {
                total += quad::integrate(radial, start, lo, inner).value;
            }
            start = std::max(start, hi);
        }
        if (start < delta)
        {
            total += quad::integrate(radial, start, delta, inner).value;
        }
        return total;
    };
    for (std::size_t k = 0; k + 1 < breaks.size(); ++k)
    {
        if (breaks[k + 1] > breaks[k])
        {
            energy += quad::integrate(ray, breaks[k], breaks[k + 1], outer).value;
        }
    }

    PerforatedCheck out;
    out.numeric = 0.5 * energy;
    const Scalar n = static_cast<Scalar>(N);
    out.closed_form = n * pi * std::log(1 / r) + n * n * pi * std::log(delta);
    for (std::size_t i = 0; i < N; ++i)
    {
        for (std::size_t j = 0; j < N; ++j)
        {
            if (i != j)
            {
                out.closed_form -= pi * std::log((points[i] - points[j]).norm());
            }
        }
    }
    out.deviation = out.numeric - out.closed_form;
    return out;
}
} // namespace vfe
