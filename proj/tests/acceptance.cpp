// Acceptance suite: one line per criterion with the measured quantities and runtime.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "vfe/cli.hpp"
#include "vfe/critfield.hpp"
#include "vfe/errors.hpp"
#include "vfe/fields.hpp"
#include "vfe/geometry.hpp"
#include "vfe/isoflux.hpp"
#include "vfe/profile.hpp"
#include "vfe/renorm.hpp"

using namespace vfe;
namespace fs = std::filesystem;

namespace
{
struct Outcome
{
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* pattern, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, pattern, args...);
    return buf;
}

SampledGraph scaled(const SampledGraph& g, Scalar t) { return {g.nodes, t * g.u}; }

// ---- criterion 1 ----
Outcome ball_flux()
{
    Scalar k = 0;
    std::string detail;
    for (Scalar rho : {0.1, 0.05, 0.01})
    {
        const Scalar remainder = std::abs(flux_gamma0_ball(rho) - rho * rho * rho / 3);
        const Scalar ki = remainder / (0.5 * std::pow(rho, 5));
        k = std::max(k, ki);
        detail += fmt("rho=%g k=%.4f ", rho, ki);
    }
    return {k <= 3, detail + fmt("fitted k=%.4f (<= 3)", k)};
}

// ---- criterion 2 ----
Outcome ball_hessian()
{
    const Scalar rho = 0.05;
    const RatioContext ctx = ball_ratio_context(rho);
    const QFormSpec spec = q_form_spec(ctx);
    const Eigen::Index n = 201;
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<Scalar> unit(-1, 1);
    Scalar worst_closed = 0;
    Scalar worst_q = 0;
    for (int trial = 0; trial < 5; ++trial)
    {
        const Scalar a0 = 0.5 + 0.2 * unit(rng), a1 = 0.3 * unit(rng), a2 = 0.3 * unit(rng);
        const Scalar b0 = unit(rng), b1 = 0.5 * unit(rng);
        const auto x = [&](Scalar z) { return a0 + a1 * z + a2 * z * z; };
        const auto theta = [&](Scalar z) { return b0 + b1 * z; };
        SampledGraph g = axis_graph(uniform_nodes(2 * rho, n));
        const VecX z = VecX::LinSpaced(n, -1, 1);
        for (Eigen::Index k = 0; k < n; ++k)
        {
            const Scalar zk = ball_mobius_z(rho, g.nodes[k]);
            g.u.row(k) << x(zk) * std::cos(theta(zk)), x(zk) * std::sin(theta(zk));
        }
        const Scalar t = 1e-3;
        const Scalar fd = -(ratio_excess(scaled(g, t), ctx) - 2 * ratio_excess(scaled(g, 0), ctx) +
                            ratio_excess(scaled(g, -t), ctx)) /
                          (t * t);
        const Scalar closed = -ball_hessian_closed_form(z, z.unaryExpr(x), z.unaryExpr(theta), rho);
        worst_closed = std::max(worst_closed, std::abs(closed - fd) / std::abs(fd));
        worst_q = std::max(worst_q, std::abs(q_form(g, spec) - fd) / std::abs(fd));
    }
    return {worst_closed <= 10 * rho && worst_q <= 1e-3,
            fmt("max rel err vs closed form %.3e (<= %.2g), vs Q %.3e (<= 1e-3)", worst_closed, 10 * rho, worst_q)};
}

// ---- criterion 3 ----
Outcome criticality()
{
    const Scalar rho = 0.1;
    const RatioContext ctx = ball_ratio_context(rho);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<Scalar> unit(0, 1);
    std::vector<Scalar> s;
    std::vector<Vec2> dirs;
    for (int i = 0; i < 100; ++i)
    {
        s.push_back(2 * rho * unit(rng));
        const Scalar a = 2 * pi * unit(rng);
        dirs.emplace_back(std::cos(a), std::sin(a));
    }
    Scalar worst = 0;
    for (int i = 0; i < 100; ++i)
    {
        worst = std::max(worst, criticality_residual(ctx, {s[i]}, {dirs[i]}));
    }
    return {worst <= 1e-6, fmt("max residual %.3e over 100 samples (<= 1e-6)", worst)};
}

// ---- criterion 4 ----
Outcome nondegeneracy()
{
    const QSpectrum sp = q_spectrum(q_form_spec(ball_ratio_context(0.1)), 32);
    const Scalar change = std::abs(sp.refined_lambda_min - sp.lambda_min) / sp.lambda_min;
    return {sp.lambda_min > 0 && sp.refined_lambda_min > 0 && change <= 0.1,
            fmt("lambda_min %.6e (M=%ld), %.6e (M=%ld), relative change %.3e (<= 0.1)", sp.lambda_min,
                static_cast<long>(sp.basis_size), sp.refined_lambda_min, static_cast<long>(sp.refined_basis_size),
                change)};
}

// ---- criterion 5 ----
Outcome q1_identity()
{
    const RatioContext ctx = ball_ratio_context(0.1);
    const VecX nodes = uniform_nodes(0.2, 51);
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<Scalar> unit(-1, 1);
    Scalar worst = 0;
    for (int i = 0; i < 20; ++i)
    {
        SampledGraph g = axis_graph(nodes);
        for (int mode = 1; mode <= 3; ++mode)
        {
            const Vec2 c(unit(rng), unit(rng));
            for (Eigen::Index k = 0; k < nodes.size(); ++k)
            {
                g.u.row(k) += 0.03 * c.transpose() * std::sin(pi * mode * nodes[k] / 0.2 + mode);
            }
        }
        const Scalar lhs = ctx.R0 * q_ell(g, 1, ctx);
        const Scalar rhs = curve_length(g, ctx.chart) * (ctx.R0 - ratio(g, ctx));
        worst = std::max(worst, std::abs(lhs - rhs) / std::abs(rhs));
    }
    return {worst <= 1e-10, fmt("max relative mismatch %.3e over 20 graphs (<= 1e-10)", worst)};
}

// ---- criterion 6 ----
Outcome wn_oracle()
{
    const QFormSpec iso = isotropic_spec();
    const WnResult one = wn_minimize(1, iso);
    WnOptions opts;
    opts.seed = 3;
    const WnResult two = wn_minimize(2, iso, opts);
    Scalar sep_err = 0;
    for (Eigen::Index k = 0; k < two.family.nodes.size(); ++k)
    {
        sep_err = std::max(sep_err,
                           std::abs((two.family.curves[0].row(k) - two.family.curves[1].row(k)).norm() - std::sqrt(2.0)));
    }
    const Scalar zero = one.family.curves[0].cwiseAbs().maxCoeff();
    const Scalar el1 = el_residual(one.family, iso);
    const Scalar el2 = el_residual(two.family, iso);
    return {sep_err <= 1e-4 && zero <= 1e-6 && el1 <= 1e-5 && el2 <= 1e-5,
            fmt("N=2 separation error %.3e (<= 1e-4); N=1 max |u| %.3e (<= 1e-6); el residual %.2e, %.2e (<= 1e-5)",
                sep_err, zero, el1, el2)};
}

// ---- criterion 7 ----
// Independent Euler-Lagrange solve: r'' = -1/(2r), r(0) = r(1) = a, by RK4 shooting on r'(0).
std::vector<Scalar> toda_shooting(Scalar a, int steps)
{
    const auto integrate = [&](Scalar slope, std::vector<Scalar>* path) {
        Scalar r = a, v = slope;
        const Scalar h = 1.0 / steps;
        const auto acc = [](Scalar x) { return -1 / (2 * x); };
        if (path)
            path->assign(1, r);
        for (int i = 0; i < steps; ++i)
        {
            const Scalar k1r = v, k1v = acc(r);
            const Scalar k2r = v + 0.5 * h * k1v, k2v = acc(r + 0.5 * h * k1r);
            const Scalar k3r = v + 0.5 * h * k2v, k3v = acc(r + 0.5 * h * k2r);
            const Scalar k4r = v + h * k3v, k4v = acc(r + h * k3r);
            r += h / 6 * (k1r + 2 * k2r + 2 * k3r + k4r);
            v += h / 6 * (k1v + 2 * k2v + 2 * k3v + k4v);
            if (path)
                path->push_back(r);
        }
        return r;
    };
    Scalar lo = 0, hi = 10;
    for (int i = 0; i < 200; ++i)
    {
        const Scalar mid = 0.5 * (lo + hi);
        (integrate(mid, nullptr) < a ? lo : hi) = mid;
    }
    std::vector<Scalar> path;
    integrate(0.5 * (lo + hi), &path);
    return path;
}

Outcome toda()
{
    const QFormSpec kin = kinetic_spec(1);
    const Scalar a = 0.5;
    WnOptions opts;
    opts.endpoints = EndpointMode::clamped;
    opts.radius = a;
    opts.nodes = 101;
    opts.tolerance = 1e-10;
    const WnResult r = wn_minimize(2, kin, opts);
    const std::vector<Scalar> path = toda_shooting(a, 1000);
    Scalar worst = 0;
    for (Eigen::Index k = 0; k < 101; ++k)
    {
        worst = std::max(worst, (r.family.curves[0].row(k) - Eigen::RowVector2d(path[10 * k], 0)).norm());
        worst = std::max(worst, (r.family.curves[1].row(k) + Eigen::RowVector2d(path[10 * k], 0)).norm());
    }
    return {worst <= 1e-3, fmt("sup-norm distance to the shooting solution %.3e (<= 1e-3)", worst)};
}

// ---- criterion 8 ----
Outcome gamma_pipeline()
{
    const RadialProfile p = solve_f0(100, 2000);
    const RadialProfile fine = solve_f0(100, 4000);
    const Scalar g50 = gamma_from_profile(p, 50);
    const Scalar g100 = gamma_from_profile(p, 100);
    const Scalar doubling = std::abs(gamma_from_profile(fine, 100) - g100);
    const Scalar disk = std::abs(disk_vortex_energy(1e-3, 0.1, p) - 2 * (pi * std::log(100.0) + g100));
    return {std::abs(g100 - g50) <= 5e-3 && doubling < 1e-4 && disk <= 2e-2,
            fmt("gamma_est(100)=%.10f; |g(100)-g(50)| %.3e (<= 5e-3); grid doubling %.3e (< 1e-4); disk energy "
                "mismatch %.3e (<= 2e-2)",
                g100, std::abs(g100 - g50), doubling, disk)};
}

// ---- criterion 9 ----
Outcome perforated()
{
    const PerforatedCheck two = perforated_renormalized_check({Vec2(-0.05, 0), Vec2(0.05, 0)}, 1, 1e-3);
    const PerforatedCheck one = perforated_renormalized_check({Vec2(0, 0)}, 1, 1e-3);
    const Scalar rel = std::abs(two.deviation) / std::abs(two.closed_form);
    return {rel <= 0.01 && std::abs(one.deviation) <= 1e-8,
            fmt("N=2 relative deviation %.3e (<= 1e-2); N=1 deviation %.3e (<= 1e-8)", rel, std::abs(one.deviation))};
}

// ---- criterion 10 ----
Outcome critical_fields()
{
    const Scalar rho = 0.1;
    const Scalar eps = 1e-3;
    ModelConstants m;
    m.L0 = 2 * rho;
    m.R0 = ball_ratio_context(rho).R0;
    m.gamma = gamma_from_profile(solve_f0(100, 2000), 100);
    m.C_Omega = c_omega_estimate(BallGeometry{rho}, {0.2 * rho, 0.1 * rho, 0.05 * rho, 0.025 * rho}).extrapolated;
    const QFormSpec spec = q_form_spec(ball_ratio_context(rho));
    m.minW = {0.0};
    for (int N = 1; N <= 5; ++N)
    {
        WnOptions opts;
        opts.nodes = 33;
        opts.seed = static_cast<std::uint64_t>(N);
        m.minW.push_back(wn_minimize(N, spec, opts).value.total);
    }

    const Scalar hc1 = hc1_expansion(eps, m);
    const bool h1_exact = H_N(1, eps, m) == hc1;
    std::string gaps;
    bool break_even_ok = true;
    for (int N = 1; N <= 5; ++N)
    {
        const Scalar rel = std::abs(break_even_field(N, eps, m) - H_N(N, eps, m)) / H_N(N, eps, m);
        break_even_ok = break_even_ok && rel <= 1e-9;
        gaps += fmt("%s%.2e", N == 1 ? "" : ",", rel);
    }
    const Scalar lo = 0.5 * H_N(1, eps, m);
    const Scalar hi = 1.5 * H_N(5, eps, m);
    bool staircase = true;
    int previous = 0;
    for (int i = 0; i < 1000; ++i)
    {
        const int N = optimal_N(lo + (hi - lo) * i / 999.0, eps, m, 5);
        staircase = staircase && N >= previous;
        previous = N;
    }
    return {h1_exact && break_even_ok && staircase,
            fmt("H_1 == Hc1 formula: %s; break-even vs H_N relative gap N=1..5: %s (<= 1e-9: %s); staircase "
                "nondecreasing: %s",
                h1_exact ? "yes" : "no", gaps.c_str(), break_even_ok ? "yes" : "no", staircase ? "yes" : "no")};
}

// ---- criterion 11 ----
Outcome biot_savart()
{
    const ClosedCurve3D circle = circle_polyline(1, 8192);
    const Scalar center_err = (biot_savart_eval(circle, Vec3::Zero()) - Vec3(0, 0, pi)).norm();
    const int n = 400;
    Scalar circulation = 0;
    for (int k = 0; k < n; ++k)
    {
        const Scalar a = 2 * pi * k / n;
        const Vec3 p = Vec3(1, 0, 0) + 0.1 * (std::cos(a) * Vec3::UnitX() + std::sin(a) * Vec3::UnitZ());
        const Vec3 dp = 0.1 * (-std::sin(a) * Vec3::UnitX() + std::cos(a) * Vec3::UnitZ());
        circulation += biot_savart_eval(circle, p).dot(dp) * 2 * pi / n;
    }
    const Scalar circ_err = std::abs(std::abs(circulation) - 2 * pi);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<Scalar> box(-1.5, 1.5);
    Scalar worst_div = 0;
    const Scalar h = 1e-4;
    for (int i = 0; i < 50; ++i)
    {
        Vec3 p(box(rng), box(rng), box(rng));
        if (std::abs(std::hypot(p.x(), p.y()) - 1) < 0.1 && std::abs(p.z()) < 0.1)
        {
            p.z() += 0.3;
        }
        Scalar div = 0;
        for (int c = 0; c < 3; ++c)
        {
            const Vec3 e = h * Vec3::Unit(c);
            div += (biot_savart_eval(circle, p + e)[c] - biot_savart_eval(circle, p - e)[c]) / (2 * h);
        }
        worst_div = std::max(worst_div, std::abs(div) / biot_savart_eval(circle, p).norm());
    }
    return {center_err <= 1e-6 && circ_err <= 1e-4 && worst_div < 1e-3,
            fmt("center error %.3e (<= 1e-6); circulation error %.3e (<= 1e-4); max relative divergence %.3e (< 1e-3)",
                center_err, circ_err, worst_div)};
}

// ---- criterion 12 ----
std::string slurp(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Outcome determinism()
{
    const std::vector<std::vector<std::string>> scenarios{
        {"isoflux-maximize", "--seed", "17"},
        {"wn-minimize", "--set", "geometry.kind=ball", "--set", "scenario.N=3", "--seed", "17"},
        {"perforated-check"},
    };
    int compared = 0;
    int mismatched = 0;
    for (std::size_t s = 0; s < scenarios.size(); ++s)
    {
        std::vector<fs::path> dirs;
        for (int repeat = 0; repeat < 2; ++repeat)
        {
            const fs::path dir = fs::temp_directory_path() / fmt("vfe_acceptance_%zu_%d", s, repeat);
            fs::remove_all(dir);
            std::vector<std::string> args{"vfe_cli"};
            args.insert(args.end(), scenarios[s].begin(), scenarios[s].end());
            args.push_back("--out");
            args.push_back(dir.string());
            std::vector<char*> argv;
            for (std::string& a : args)
            {
                argv.push_back(a.data());
            }
            std::ostringstream out, err;
            if (cli::main(static_cast<int>(argv.size()), argv.data(), out, err) != cli::exit_ok)
            {
                return {false, "scenario " + scenarios[s][0] + " failed: " + err.str()};
            }
            dirs.push_back(dir);
        }
        for (const auto& entry : fs::directory_iterator(dirs[0]))
        {
            if (entry.path().extension() == ".csv")
            {
                ++compared;
                mismatched += slurp(entry.path()) != slurp(dirs[1] / entry.path().filename());
            }
        }
    }
    return {compared > 0 && mismatched == 0, fmt("%d CSV files compared across 3 scenarios, %d differ", compared, mismatched)};
}
} // namespace

int main()
{
    struct Criterion
    {
        int id;
        const char* name;
        double limit_s;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria{
        {1, "ball flux", 1, ball_flux},
        {2, "ball hessian", 10, ball_hessian},
        {3, "criticality", 1, criticality},
        {4, "strong nondegeneracy", 5, nondegeneracy},
        {5, "Q_1 identity", 1, q1_identity},
        {6, "W_N oracle", 30, wn_oracle},
        {7, "Toda structure", 60, toda},
        {8, "gamma pipeline", 30, gamma_pipeline},
        {9, "perforated identity", 60, perforated},
        {10, "critical-field algebra", 5, critical_fields},
        {11, "Biot-Savart", 5, biot_savart},
        {12, "determinism", 60, determinism},
    };
    int failures = 0;
    for (const Criterion& c : criteria)
    {
        const auto start = std::chrono::steady_clock::now();
        Outcome outcome;
        try
        {
            outcome = c.run();
        }
        catch (const std::exception& e)
        {
            outcome = {false, std::string("exception: ") + e.what()};
        }
        const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_time = elapsed < c.limit_s;
        const bool pass = outcome.pass && in_time;
        failures += !pass;
        std::printf("criterion %2d %-24s %s  %s; runtime %.3f s (limit %g s%s)\n", c.id, c.name, pass ? "PASS" : "FAIL",
                    outcome.detail.c_str(), elapsed, c.limit_s, in_time ? "" : ", exceeded");
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
