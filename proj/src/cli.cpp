#include "vfe/cli.hpp"

#include <CLI11.hpp>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "vfe/critfield.hpp"
#include "vfe/errors.hpp"
#include "vfe/fields.hpp"
#include "vfe/geometry.hpp"
#include "vfe/isoflux.hpp"
#include "vfe/profile.hpp"
#include "vfe/renorm.hpp"

namespace vfe::cli
{
namespace
{
std::string trim(const std::string& s)
{
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos)
    {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> parts;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, sep))
    {
        parts.push_back(trim(item));
    }
    return parts;
}

Scalar parse_real(const std::string& key, const std::string& text)
{
    Scalar value = 0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc() || ptr != end || !std::isfinite(value))
    {
        throw ValidationError("config key " + key + ": expected a finite number, got '" + text + "'");
    }
    return value;
}

std::string format(Scalar v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// CSV with a header row; reals printed with 17 significant digits.
class CsvWriter
{
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
        : path_(path), out_(path, std::ios::binary)
    {
        if (!out_)
        {
            throw ValidationError("cannot write " + path.string());
        }
        for (std::size_t i = 0; i < header.size(); ++i)
        {
            out_ << (i ? "," : "") << header[i];
        }
        out_ << '\n';
    }

    template <typename... Ts>
    void row(const Ts&... values)
    {
        bool first = true;
        ((out_ << (first ? "" : ",") << cell(values), first = false), ...);
        out_ << '\n';
    }

private:
    static std::string cell(Scalar v) { return format(v); }
    static std::string cell(int v) { return std::to_string(v); }
    static std::string cell(long v) { return std::to_string(v); }
    static std::string cell(long long v) { return std::to_string(v); }
    static std::string cell(const std::string& v) { return v; }

    std::filesystem::path path_;
    std::ofstream out_;
};

std::filesystem::path output_dir(const Config& c)
{
    std::filesystem::path dir = c.raw("output.dir");
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
    {
        throw ValidationError("cannot create output directory " + dir.string() + ": " + ec.message());
    }
    return dir;
}

Scalar positive(const Config& c, const std::string& key)
{
    const Scalar v = c.real(key);
    if (!(v > 0))
    {
        throw ValidationError("config key " + key + " must be positive");
    }
    return v;
}

long long at_least(const Config& c, const std::string& key, long long lo)
{
    const long long v = c.integer(key);
    if (v < lo)
    {
        throw ValidationError("config key " + key + " must be at least " + std::to_string(lo));
    }
    return v;
}

Scalar ball_rho(const Config& c)
{
    const Scalar rho = positive(c, "geometry.ball.rho");
    if (rho >= 1)
    {
        throw ValidationError("geometry.ball.rho must be below 1");
    }
    return rho;
}

const std::string& geometry_kind(const Config& c)
{
    const std::string& kind = c.raw("geometry.kind");
    if (kind != "ball" && kind != "isotropic" && kind != "kinetic")
    {
        throw ValidationError("geometry.kind must be ball, isotropic or kinetic; got '" + kind + "'");
    }
    return kind;
}

void require_ball(const Config& c, const char* subcommand)
{
    if (geometry_kind(c) != "ball")
    {
        throw ValidationError(std::string(subcommand) + " needs geometry.kind=ball");
    }
}

QFormSpec configured_spec(const Config& c)
{
    const std::string& kind = geometry_kind(c);
    if (kind == "ball")
    {
        return q_form_spec(ball_ratio_context(ball_rho(c)));
    }
    return kind == "isotropic" ? isotropic_spec() : kinetic_spec();
}

ModelConstants configured_constants(const Config& c, int N_needed)
{
    ModelConstants m;
    const std::string& kind = geometry_kind(c);
    if (kind == "ball")
    {
        const Scalar rho = ball_rho(c);
        m.L0 = c.is_auto("model.L0") ? 2 * rho : positive(c, "model.L0");
        m.R0 = c.is_auto("model.R0") ? ball_field(rho).flux0 / (2 * rho) : positive(c, "model.R0");
    }
    else
    {
        m.L0 = c.is_auto("model.L0") ? 1.0 : positive(c, "model.L0");
        m.R0 = c.is_auto("model.R0") ? 0.5 * m.L0 : positive(c, "model.R0");
    }
    m.C_Omega = c.real("model.C_Omega");
    m.gamma = c.real("model.gamma");
    m.J0 = c.real("model.J0");
    m.minW = {0.0};
    for (Scalar w : c.reals("model.min_w"))
    {
        m.minW.push_back(w);
    }
    if (static_cast<int>(m.minW.size()) <= N_needed)
    {
        throw ValidationError("model.min_w has " + std::to_string(m.minW.size() - 1) +
                              " entries; min W_N is needed for N = 1.." + std::to_string(N_needed));
    }
    return m;
}

Scalar configured_eps(const Config& c)
{
    const Scalar eps = c.real("scenario.eps");
    if (!(eps > 0 && eps < 1))
    {
        throw ValidationError("scenario.eps must lie in (0, 1)");
    }
    return eps;
}

// Smooth random start: four sine modes per component, scaled to the requested amplitude.
SampledGraph random_start(const VecX& nodes, Scalar amplitude, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<Scalar> unit(-1, 1);
    SampledGraph g = axis_graph(nodes);
    const Scalar L = nodes[nodes.size() - 1];
    for (int mode = 1; mode <= 4; ++mode)
    {
        const Scalar ax = unit(rng);
        const Scalar ay = unit(rng);
        for (Eigen::Index k = 0; k < nodes.size(); ++k)
        {
            const Scalar phase = std::sin(pi * mode * nodes[k] / L + 0.5 * mode);
            g.u.row(k) += Vec2(ax, ay).transpose() * phase / mode;
        }
    }
    const Scalar peak = g.u.cwiseAbs().maxCoeff();
    if (peak > 0)
    {
        g.u *= amplitude / peak;
    }
    return g;
}

void ball_setup(const Config& c, std::ostream& out)
{
    require_ball(c, "ball-setup");
    const Scalar rho = ball_rho(c);
    const auto dir = output_dir(c);
    const BallChart ball = ball_chart(rho);
    const BallField field = ball_field(rho);
    const Scalar L0 = ball.chart.length;
    CsvWriter summary(dir / "ball_summary.csv", {"rho", "L0", "tube_radius", "flux0", "R0", "flux_leading"});
    summary.row(rho, L0, ball.chart.radius, field.flux0, field.flux0 / L0, rho * rho * rho / 3);

    const VecX nodes = uniform_nodes(L0, at_least(c, "discretization.nodes", 2));
    CsvWriter jet(dir / "ball_axis_jet.csv",
                  {"s", "z", "g_axis_11", "g_axis_12", "g_axis_22", "dg33_1", "dg33_2", "d2g33_11", "d2g33_12",
                   "d2g33_22", "dB0_u_e3_1", "dB0_u_e3_2", "dB0_uv", "ddB0_11", "ddB0_12", "ddB0_22"});
    for (Eigen::Index k = 0; k < nodes.size(); ++k)
    {
        const Scalar s = nodes[k];
        const Mat2 g = ball.axis_jet.g_axis(s);
        const Vec2 d = ball.axis_jet.dg33(s);
        const Mat2 dd = ball.axis_jet.d2g33(s);
        const Vec2 b = field.jet.dB0_u_e3(s);
        const Mat2 bb = field.jet.ddB0_u_e3(s);
        jet.row(s, ball_mobius_z(rho, s), g(0, 0), g(0, 1), g(1, 1), d.x(), d.y(), dd(0, 0), dd(0, 1), dd(1, 1), b.x(),
                b.y(), field.jet.dB0_uv(s), bb(0, 0), bb(0, 1), bb(1, 1));
    }
    out << "rho=" << format(rho) << " L0=" << format(L0) << " flux0=" << format(field.flux0)
        << " R0=" << format(field.flux0 / L0) << '\n';
}

void isoflux_maximize(const Config& c, std::ostream& out)
{
    require_ball(c, "isoflux-maximize");
    const Scalar rho = ball_rho(c);
    const RatioContext ctx = ball_ratio_context(rho);
    const VecX nodes = uniform_nodes(ctx.chart.length, at_least(c, "discretization.nodes", 3));
    const SampledGraph start =
        random_start(nodes, c.real("isoflux.initial_amplitude") * ctx.chart.radius, c.unsigned_integer("seed"));
    MaximizeOptions options;
    options.tolerance = positive(c, "discretization.tolerance");
    options.max_iter = static_cast<int>(at_least(c, "discretization.max_iter", 1));
    const MaximizeResult result = maximize_ratio(start, ctx, options);

    const auto dir = output_dir(c);
    CsvWriter trace(dir / "isoflux_trace.csv", {"iter", "ratio", "grad_norm"});
    for (const RatioTraceRow& row : result.trace)
    {
        trace.row(row.iteration, row.ratio, row.gradient_norm);
    }
    CsvWriter curve(dir / "isoflux_curve.csv", {"s", "u_1", "u_2"});
    for (Eigen::Index k = 0; k < nodes.size(); ++k)
    {
        curve.row(nodes[k], result.curve.u(k, 0), result.curve.u(k, 1));
    }
    out << "ratio=" << format(result.ratio) << " R0=" << format(ctx.R0) << " iterations=" << result.iterations
        << " status=" << opt::to_string(result.status) << " truncated=" << (result.truncated ? "true" : "false")
        << '\n';
    if (result.status != opt::Status::converged)
    {
        throw ConvergenceError("isoflux-maximize: " + opt::to_string(result.status) + " at gradient norm " +
                               format(result.gradient_norm));
    }
}

void q_spectrum_cmd(const Config& c, std::ostream& out)
{
    const QFormSpec spec = configured_spec(c);
    const QSpectrum spectrum = q_spectrum(spec, at_least(c, "discretization.basis_size", 4));
    CsvWriter csv(output_dir(c) / "q_spectrum.csv", {"basis_size", "mode_index", "rayleigh_quotient"});
    for (Eigen::Index i = 0; i < spectrum.eigenvalues.size(); ++i)
    {
        csv.row(static_cast<long long>(spectrum.basis_size), static_cast<long long>(i), spectrum.eigenvalues[i]);
    }
    for (Eigen::Index i = 0; i < spectrum.refined_eigenvalues.size(); ++i)
    {
        csv.row(static_cast<long long>(spectrum.refined_basis_size), static_cast<long long>(i),
                spectrum.refined_eigenvalues[i]);
    }
    out << "lambda_min=" << format(spectrum.lambda_min) << " lambda_max=" << format(spectrum.lambda_max)
        << " refined_lambda_min=" << format(spectrum.refined_lambda_min) << " alpha_Q=" << format(spectrum.alpha_Q)
        << '\n';
}

void write_family(const std::filesystem::path& dir, const FilamentFamily& family)
{
    CsvWriter csv(dir / "wn_family.csv", {"curve_index", "s", "u_1", "u_2"});
    for (int i = 0; i < family.size(); ++i)
    {
        for (Eigen::Index k = 0; k < family.nodes.size(); ++k)
        {
            csv.row(i, family.nodes[k], family.curves[i](k, 0), family.curves[i](k, 1));
        }
    }
}

void wn_minimize_cmd(const Config& c, std::ostream& out)
{
    const QFormSpec spec = configured_spec(c);
    const int N = static_cast<int>(at_least(c, "scenario.N", 1));
    WnOptions options;
    const std::string& endpoints = c.raw("wn.endpoints");
    if (endpoints != "free" && endpoints != "clamped")
    {
        throw ValidationError("wn.endpoints must be free or clamped; got '" + endpoints + "'");
    }
    options.endpoints = endpoints == "free" ? EndpointMode::free : EndpointMode::clamped;
    options.nodes = at_least(c, "discretization.nodes", 3);
    if (!c.is_auto("wn.clamp_radius"))
    {
        options.radius = positive(c, "wn.clamp_radius");
    }
    options.noise = c.real("wn.noise");
    options.seed = c.unsigned_integer("seed");
    options.tolerance = positive(c, "discretization.tolerance");
    options.max_iter = static_cast<int>(at_least(c, "discretization.max_iter", 1));

    const auto dir = output_dir(c);
    WnResult result;
    try
    {
        result = wn_minimize(N, spec, options);
    }
    catch (const StagnationError& e)
    {
        write_family(dir, e.last);
        throw;
    }
    write_family(dir, result.family);
    CsvWriter trace(dir / "wn_trace.csv", {"iter", "energy", "grad_norm", "min_separation"});
    for (const WnTraceRow& row : result.trace)
    {
        trace.row(row.iteration, row.energy, row.gradient_norm, row.min_separation);
    }
    out << "energy=" << format(result.value.total) << " min_separation=" << format(min_separation(result.family, spec))
        << " el_residual=" << format(el_residual(result.family, spec)) << " iterations=" << result.iterations
        << " status=" << opt::to_string(result.status) << '\n';
    if (result.status != opt::Status::converged)
    {
        throw ConvergenceError("wn-minimize: " + opt::to_string(result.status) + " at gradient norm " +
                               format(result.gradient_norm));
    }
}

void critical_fields_cmd(const Config& c, std::ostream& out)
{
    const int N_max = static_cast<int>(at_least(c, "scenario.N_max", 1));
    const ModelConstants m = configured_constants(c, N_max);
    const CriticalFieldTable table = critical_field_table(configured_eps(c), m, N_max);
    CsvWriter csv(output_dir(c) / "critical_fields.csv", {"N", "k_N", "H_N", "g_eps_N"});
    for (const CriticalFieldRow& row : table.rows)
    {
        csv.row(row.N, row.k_N, row.H_N, row.g_eps_N);
    }
    out << "rows=" << table.rows.size() << " increasing=" << (table.increasing ? "true" : "false")
        << " R0=" << format(m.R0) << " L0=" << format(m.L0) << '\n';
}

void optimal_n_cmd(const Config& c, std::ostream& out)
{
    const int N_max = static_cast<int>(at_least(c, "scenario.N_max", 1));
    const ModelConstants m = configured_constants(c, N_max);
    const Scalar eps = configured_eps(c);
    const Scalar lo = c.is_auto("scenario.h_ex_min") ? 0.5 * H_N(1, eps, m) : positive(c, "scenario.h_ex_min");
    const Scalar hi = c.is_auto("scenario.h_ex_max") ? 1.5 * H_N(N_max, eps, m) : positive(c, "scenario.h_ex_max");
    const long long count = at_least(c, "scenario.h_ex_count", 2);
    if (!(hi > lo))
    {
        throw ValidationError("scenario.h_ex_max must exceed scenario.h_ex_min");
    }
    CsvWriter csv(output_dir(c) / "optimal_n.csv", {"h_ex", "N", "g_eps_N"});
    int previous = 0;
    bool monotone = true;
    for (long long i = 0; i < count; ++i)
    {
        const Scalar h = lo + (hi - lo) * static_cast<Scalar>(i) / static_cast<Scalar>(count - 1);
        const int N = optimal_N(h, eps, m, N_max);
        monotone = monotone && N >= previous;
        previous = N;
        csv.row(h, N, g_eps(N, h, eps, m));
    }
    out << "samples=" << count << " final_N=" << previous << " monotone=" << (monotone ? "true" : "false") << '\n';
}

void profile_gamma_cmd(const Config& c, std::ostream& out)
{
    const Scalar R_max = c.real("profile.R_max");
    const long long nodes = c.integer("profile.nodes");
    if (R_max < 20 || nodes < 2000)
    {
        throw ValidationError("profile.R_max must be at least 20 and profile.nodes at least 2000");
    }
    const RadialProfile p = solve_f0(R_max, static_cast<int>(nodes));
    const auto dir = output_dir(c);
    CsvWriter profile(dir / "profile.csv", {"r", "f"});
    for (Eigen::Index i = 0; i < p.r_nodes.size(); ++i)
    {
        profile.row(p.r_nodes[i], p.f_values[i]);
    }
    std::vector<Scalar> radii;
    for (Scalar R = R_max; R >= 1; R /= 2)
    {
        radii.insert(radii.begin(), R);
    }
    CsvWriter convergence(dir / "gamma_convergence.csv", {"R", "gamma_est"});
    for (Scalar R : radii)
    {
        convergence.row(R, gamma_from_profile(p, R));
    }
    const Scalar gamma = gamma_from_profile(p, R_max);
    const Scalar err = std::abs(gamma - gamma_from_profile(p, R_max / 2));
    out << "gamma_est=" << format(gamma) << " err=" << format(err) << '\n';
}

void perforated_cmd(const Config& c, std::ostream& out)
{
    const std::vector<Vec2> points = c.points("perforated.points");
    const Scalar delta = positive(c, "perforated.delta");
    const Scalar r = positive(c, "perforated.r");
    const PerforatedCheck check = perforated_renormalized_check(points, delta, r);
    CsvWriter csv(output_dir(c) / "perforated.csv", {"N", "delta", "r", "numeric", "closed_form", "deviation"});
    csv.row(static_cast<int>(points.size()), delta, r, check.numeric, check.closed_form, check.deviation);
    out << "numeric=" << format(check.numeric) << " closed_form=" << format(check.closed_form)
        << " relative_deviation=" << format(check.deviation / std::abs(check.closed_form)) << '\n';
}

void c_omega_cmd(const Config& c, std::ostream& out)
{
    require_ball(c, "c-omega");
    const Scalar rho = ball_rho(c);
    std::vector<Scalar> cuts;
    if (c.is_auto("c_omega.rho_cuts"))
    {
        cuts = {0.2 * rho, 0.1 * rho, 0.05 * rho, 0.025 * rho};
    }
    else
    {
        cuts = c.reals("c_omega.rho_cuts");
    }
    COmegaOptions options;
    options.arc_segments = static_cast<int>(at_least(c, "c_omega.arc_segments", 8));
    options.resolution = positive(c, "c_omega.resolution");
    const COmegaReport report = c_omega_estimate(BallGeometry{rho}, cuts, options);
    CsvWriter csv(output_dir(c) / "c_omega.csv", {"rho", "energy", "counterterm", "sum"});
    for (std::size_t i = 0; i < report.rho.size(); ++i)
    {
        csv.row(report.rho[i], report.energy[i], report.counterterm[i], report.sum[i]);
    }
    out << "c_omega_extrapolated=" << format(report.extrapolated) << '\n';
}

int validate_threads(std::ostream& err)
{
    const char* env = std::getenv("VFE_THREADS");
    if (!env)
    {
        return exit_ok;
    }
    const std::string text = env;
    long long value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size() || value < 1)
    {
        err << "error: VFE_THREADS must be a positive integer, got '" << text << "'\n";
        return exit_validation;
    }
    return exit_ok;
}
} // namespace

const std::vector<KeySpec>& key_registry()
{
    static const std::vector<KeySpec> keys{
        {"seed", "0", "seed for random initial data"},
        {"output.dir", "out", "directory for CSV artifacts"},
        {"geometry.kind", "ball", "ball, isotropic or kinetic"},
        {"geometry.ball.rho", "0.1", "ball radius"},
        {"discretization.nodes", "65", "grid nodes along the axis"},
        {"discretization.basis_size", "32", "hat functions per component for q-spectrum"},
        {"discretization.tolerance", "1e-8", "optimizer gradient tolerance"},
        {"discretization.max_iter", "5000", "optimizer iteration cap"},
        {"model.R0", "auto", "isoflux ratio maximum (auto: from geometry)"},
        {"model.L0", "auto", "length of the optimal curve (auto: from geometry)"},
        {"model.C_Omega", "0", "self-interaction constant"},
        {"model.gamma", "0", "vortex core constant"},
        {"model.J0", "0", "Meissner energy coefficient"},
        {"model.min_w", "", "min W_N for N = 1, 2, ... (comma separated)"},
        {"scenario.N", "2", "number of filaments"},
        {"scenario.N_max", "5", "largest N in tables and sweeps"},
        {"scenario.eps", "1e-3", "coherence length"},
        {"scenario.h_ex_min", "auto", "sweep start (auto: H_1 / 2)"},
        {"scenario.h_ex_max", "auto", "sweep end (auto: 1.5 H_{N_max})"},
        {"scenario.h_ex_count", "1000", "sweep samples"},
        {"wn.endpoints", "free", "free or clamped"},
        {"wn.clamp_radius", "auto", "radius of the initial polygon (auto: optimal constant polygon)"},
        {"wn.noise", "1e-3", "amplitude of the seeded initial perturbation"},
        {"isoflux.initial_amplitude", "0.01", "initial displacement as a fraction of the tube radius"},
        {"profile.R_max", "100", "outer radius of the profile solve"},
        {"profile.nodes", "2000", "profile grid nodes"},
        {"perforated.points", "-0.05,0;0.05,0", "vortex centres as x,y;x,y"},
        {"perforated.delta", "1", "outer disk radius"},
        {"perforated.r", "1e-3", "excluded disk radius"},
        {"c_omega.rho_cuts", "auto", "decreasing cut radii (auto: rho * 0.2, 0.1, 0.05, 0.025)"},
        {"c_omega.arc_segments", "256", "polyline segments on the closing arc"},
        {"c_omega.resolution", "1", "quadrature refinement factor"},
    };
    return keys;
}

Config::Config()
{
    for (const KeySpec& k : key_registry())
    {
        values_[k.key] = k.default_value;
    }
}

void Config::set(const std::string& key, const std::string& value)
{
    const auto it = values_.find(key);
    if (it == values_.end())
    {
        std::string accepted;
        for (const KeySpec& k : key_registry())
        {
            accepted += (accepted.empty() ? "" : ", ") + k.key;
        }
        throw ValidationError("unknown config key '" + key + "'; accepted keys: " + accepted);
    }
    it->second = value;
}

void Config::set_assignment(const std::string& assignment)
{
    std::string line = assignment;
    if (const auto hash = line.find('#'); hash != std::string::npos)
    {
        line.erase(hash);
    }
    line = trim(line);
    if (line.empty())
    {
        return;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
    {
        throw ValidationError("expected key=value, got '" + line + "'");
    }
    set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
}

void Config::load_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
    {
        throw ValidationError("cannot read config file " + path);
    }
    std::string line;
    int number = 0;
    while (std::getline(in, line))
    {
        ++number;
        try
        {
            set_assignment(line);
        }
        catch (const ValidationError& e)
        {
            throw ValidationError(path + ":" + std::to_string(number) + ": " + e.what());
        }
    }
}

const std::string& Config::raw(const std::string& key) const
{
    const auto it = values_.find(key);
    if (it == values_.end())
    {
        throw ValidationError("unknown config key '" + key + "'");
    }
    return it->second;
}

Scalar Config::real(const std::string& key) const { return parse_real(key, raw(key)); }

long long Config::integer(const std::string& key) const
{
    const std::string& text = raw(key);
    long long value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size())
    {
        throw ValidationError("config key " + key + ": expected an integer, got '" + text + "'");
    }
    return value;
}

std::uint64_t Config::unsigned_integer(const std::string& key) const
{
    const std::string& text = raw(key);
    std::uint64_t value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size())
    {
        throw ValidationError("config key " + key + ": expected an unsigned integer, got '" + text + "'");
    }
    return value;
}

std::vector<Scalar> Config::reals(const std::string& key) const
{
    std::vector<Scalar> out;
    if (trim(raw(key)).empty())
    {
        return out;
    }
    for (const std::string& part : split(raw(key), ','))
    {
        out.push_back(parse_real(key, part));
    }
    return out;
}

std::vector<Vec2> Config::points(const std::string& key) const
{
    std::vector<Vec2> out;
    for (const std::string& pair : split(raw(key), ';'))
    {
        const std::vector<std::string> xy = split(pair, ',');
        if (xy.size() != 2)
        {
            throw ValidationError("config key " + key + ": expected x,y pairs separated by ';', got '" + pair + "'");
        }
        out.emplace_back(parse_real(key, xy[0]), parse_real(key, xy[1]));
    }
    return out;
}

std::string Config::resolved() const
{
    std::string text;
    for (const KeySpec& k : key_registry())
    {
        text += k.key + "=" + values_.at(k.key) + "\n";
    }
    return text;
}

const std::vector<std::string>& subcommands()
{
    static const std::vector<std::string> names{"ball-setup",       "isoflux-maximize", "q-spectrum",
                                                "wn-minimize",      "critical-fields",  "optimal-n",
                                                "profile-gamma",    "perforated-check", "c-omega"};
    return names;
}

void run_subcommand(const std::string& name, const Config& config, std::ostream& out)
{
    using Handler = void (*)(const Config&, std::ostream&);
    static const std::map<std::string, Handler> handlers{
        {"ball-setup", ball_setup},          {"isoflux-maximize", isoflux_maximize},
        {"q-spectrum", q_spectrum_cmd},      {"wn-minimize", wn_minimize_cmd},
        {"critical-fields", critical_fields_cmd}, {"optimal-n", optimal_n_cmd},
        {"profile-gamma", profile_gamma_cmd}, {"perforated-check", perforated_cmd},
        {"c-omega", c_omega_cmd},
    };
    const auto it = handlers.find(name);
    if (it == handlers.end())
    {
        throw ValidationError("unknown subcommand '" + name + "'");
    }
    const auto dir = output_dir(config);
    std::ofstream resolved(dir / "resolved_config.txt", std::ios::binary);
    resolved << config.resolved();
    resolved.close();
    it->second(config, out);
}

int main(int argc, char** argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Vortex filament energetics: isoflux curves, renormalized energies and critical fields"};
    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_dir;
    std::uint64_t seed = 0;
    app.add_option("--config", config_path, "flat key=value config file");
    app.add_option("--set", overrides, "override a config key (key=value), repeatable");
    app.add_option("--out", out_dir, "output directory (overrides output.dir)");
    auto* seed_option = app.add_option("--seed", seed, "random seed (overrides seed)");
    app.require_subcommand(1);
    for (const std::string& name : subcommands())
    {
        app.add_subcommand(name)->fallthrough();
    }
    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e)
    {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_validation;
    }
    if (const int code = validate_threads(err); code != exit_ok)
    {
        return code;
    }
    const std::string name = app.get_subcommands().front()->get_name();
    try
    {
        Config config;
        if (!config_path.empty())
        {
            config.load_file(config_path);
        }
        for (const std::string& assignment : overrides)
        {
            config.set_assignment(assignment);
        }
        if (!out_dir.empty())
        {
            config.set("output.dir", out_dir);
        }
        if (seed_option->count() > 0)
        {
            config.set("seed", std::to_string(seed));
        }
        run_subcommand(name, config, out);
        return exit_ok;
    }
    catch (const ConvergenceError& e)
    {
        err << "error[nonconvergence] " << name << ": " << e.what() << '\n';
        return exit_nonconvergence;
    }
    catch (const ValidationError& e)
    {
        err << "error[validation] " << name << ": " << e.what() << '\n';
        return exit_validation;
    }
    catch (const ArgumentError& e)
    {
        err << "error[validation] " << name << ": " << e.what() << '\n';
        return exit_validation;
    }
    catch (const DomainError& e)
    {
        err << "error[validation] " << name << ": " << e.what() << '\n';
        return exit_validation;
    }
    catch (const std::exception& e)
    {
        err << "error " << name << ": " << e.what() << '\n';
        return exit_failure;
    }
}
} // namespace vfe::cli
