#include "vfe/fields.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "vfe/errors.hpp"
#include "vfe/finite_difference.hpp"
#include "vfe/quadrature.hpp"

namespace vfe
{
namespace
{
// (cosh r - sinh r / r) / r^2, with the series sum_{k>=1} 2k r^(2k-2) / (2k+1)! near 0
// where the difference cancels.
Scalar radial_factor(Scalar r)
{
    if (r < 1)
    {
        const Scalar r2 = r * r;
        Scalar sum = 0;
        Scalar power = 1;
        Scalar factorial = 6; // (2k+1)! at k = 1
        for (int k = 1; k <= 14; ++k)
        {
            sum += 2 * k * power / factorial;
            power *= r2;
            factorial *= (2 * k + 2) * (2 * k + 3);
        }
        return sum;
    }
    return (std::cosh(r) - std::sinh(r) / r) / (r * r);
}

Scalar ball_prefactor(Scalar rho) { return 3 * rho / (2 * std::sinh(rho)); }

void require_positive_rho(Scalar rho, const char* what)
{
    if (!(rho > 0) || !std::isfinite(rho))
    {
        throw DomainError(std::string(what) + ": rho must be positive, got " + std::to_string(rho));
    }
}

} // namespace

FieldJet field_jet_from_curl(const CurlForm& curl, Scalar step)
{
    FieldJet jet;
    jet.dB0_u_e3 = [curl](Scalar s) -> Vec2 {
        const Mat3 w = curl(Vec2::Zero(), s);
        return {w(0, 2), w(1, 2)};
    };
    jet.dB0_uv = [curl](Scalar s) { return curl(Vec2::Zero(), s)(0, 1); };
    jet.ddB0_u_e3 = [curl, step](Scalar s) -> Mat2 {
        Mat2 m;
        for (int i = 0; i < 2; ++i)
        {
            const Vec2 e = Vec2::Unit(i);
            const Vec3 column = fd::derivative([&](Scalar t) -> Vec3 { return curl(t * e, s).col(2); }, step);
            m(i, 0) = column[0];
            m(i, 1) = column[1];
        }
        // Only the quadratic form u^T m u is meaningful.
        return 0.5 * (m + m.transpose());
    };
    return jet;
}

Scalar ball_meissner_curl(Scalar rho, Scalar r, Scalar phi)
{
    require_positive_rho(rho, "ball_meissner_curl");
    if (r < 0 || r > rho)
    {
        throw DomainError("ball_meissner_curl: r = " + std::to_string(r) + " outside [0, rho]");
    }
    if (phi < 0 || phi > pi)
    {
        throw DomainError("ball_meissner_curl: phi = " + std::to_string(phi) + " outside [0, pi]");
    }
    return ball_prefactor(rho) * radial_factor(r) * r * std::sin(phi);
}

Scalar flux_gamma0_ball(Scalar rho)
{
    require_positive_rho(rho, "flux_gamma0_ball");
    const Scalar tol = 1e-13 * rho * rho * rho;
    const quad::AdaptiveOptions outer{tol, 1e-13, 40};
    const auto shell = [&](Scalar r) {
        const quad::AdaptiveOptions inner{tol / (2 * rho * std::max(r, rho * 1e-3)), 1e-13, 40};
        return r * quad::integrate([&](Scalar phi) { return ball_meissner_curl(rho, r, phi); }, 0, pi, inner).value;
    };
    return quad::integrate(shell, 0, rho, outer).value;
}

CurlForm ball_curl_form(Scalar rho)
{
    require_positive_rho(rho, "ball_curl_form");
    const Scalar k = ball_prefactor(rho);
    return [rho, k](const Vec2& u, Scalar s) -> Mat3 {
        const Scalar z = ball_mobius_z(rho, s);
        const Scalar q = u.squaredNorm();
        const Scalar den = 1 + q * z * z;
        const Scalar r_over_x = rho * (1 + z * z) / den;
        const Scalar big_r = r_over_x * std::sqrt(q);
        const Scalar big_z = rho * z * (1 - q) / den;
        const Scalar jacobian = rho * rho * (1 + z * z) * (1 - q) / (den * den);
        const Scalar r = std::min(std::hypot(big_r, big_z), rho);
        const Scalar w = -k * radial_factor(r) * r_over_x * jacobian / rho;
        Mat3 form = Mat3::Zero();
        form(0, 2) = w * u.x();
        form(1, 2) = w * u.y();
        form(2, 0) = -form(0, 2);
        form(2, 1) = -form(1, 2);
        return form;
    };
}

BallField ball_field(Scalar rho)
{
    BallField out;
    out.curl = ball_curl_form(rho);
    out.jet = field_jet_from_curl(out.curl);
    out.flux0 = flux_gamma0_ball(rho);
    return out;
}

Scalar flux_difference(const SampledGraph& curve, const TubeChart& chart, const CurlForm& curl, int sigma_points)
{
    curve.validate();
    require_inside(curve, chart.radius, "flux_difference");
    const quad::Rule rule = quad::gauss_legendre(sigma_points, 0, 1);
    const auto ruled = [&](const Vec2& u, Scalar s, const Vec2& d) {
        if (u.squaredNorm() == 0)
        {
            return Scalar(0);
        }
        Scalar sum = 0;
        for (std::size_t i = 0; i < rule.nodes.size(); ++i)
        {
            const Scalar sigma = rule.nodes[i];
            const Mat3 w = curl(sigma * u, s);
            const Vec3 a(u.x(), u.y(), 0);
            const Vec3 b(sigma * d.x(), sigma * d.y(), 1);
            sum += rule.weights[i] * a.dot(w * b);
        }
        return sum;
    };
    Scalar total = 0;
    for (Eigen::Index k = 0; k + 1 < curve.size(); ++k)
    {
        const Scalar h = curve.nodes[k + 1] - curve.nodes[k];
        const Vec2 d = (curve.at(k + 1) - curve.at(k)) / h;
        total += 0.5 * h * (ruled(curve.at(k), curve.nodes[k], d) + ruled(curve.at(k + 1), curve.nodes[k + 1], d));
    }
    return total;
}

void ClosedCurve3D::validate() const
{
    if (points.size() < 3)
    {
        throw ArgumentError("ClosedCurve3D: at least three vertices required");
    }
    for (std::size_t i = 0; i < points.size(); ++i)
    {
        if (!points[i].allFinite())
        {
            throw ArgumentError("ClosedCurve3D: non-finite vertex " + std::to_string(i));
        }
        if (points[i] == points[(i + 1) % points.size()])
        {
            throw ArgumentError("ClosedCurve3D: repeated consecutive vertex " + std::to_string(i));
        }
    }
}

namespace
{
// Exact contribution of segment [A, B] with a = A - p, b = B - p.
Vec3 segment_field(const Vec3& a, const Vec3& b)
{
    const Vec3 d = b - a;
    const Vec3 axb = a.cross(b);
    const Scalar n2 = axb.squaredNorm();
    const Scalar na = a.norm();
    const Scalar nb = b.norm();
    if (n2 <= 1e-28 * na * na * nb * nb)
    {
        return Vec3::Zero(); // p on the line through the segment, outside it
    }
    return 0.5 * axb / n2 * (d.dot(b) / nb - d.dot(a) / na);
}

struct Projection
{
    Scalar distance;
    Vec3 point;
    Scalar t;
};

Projection project_to_segment(const Vec3& a, const Vec3& b, const Vec3& p)
{
    const Vec3 d = b - a;
    const Scalar t = std::clamp((p - a).dot(d) / d.squaredNorm(), Scalar(0), Scalar(1));
    const Vec3 q = a + t * d;
    return {(q - p).norm(), q, t};
}

} // namespace

Vec3 biot_savart_eval(const ClosedCurve3D& curve, const Vec3& p, Scalar multiplicity)
{
    const std::size_t n = curve.points.size();
    Vec3 total = Vec3::Zero();
    for (std::size_t i = 0; i < n; ++i)
    {
        const Vec3& pa = curve.points[i];
        const Vec3& pb = curve.points[(i + 1) % n];
        const Vec3 a = pa - p;
        const Vec3 b = pb - p;
        if (project_to_segment(pa, pb, p).distance <= 1e-12)
        {
            throw SingularityError("biot_savart_eval: point lies on segment " + std::to_string(i));
        }
        total += segment_field(a, b);
    }
    return multiplicity * total;
}

Vec3 biot_savart_eval(const ParametricLoop& loop, const Vec3& p)
{
    const Scalar dt = loop.period / loop.samples;
    Vec3 total = Vec3::Zero();
    for (int k = 0; k < loop.samples; ++k)
    {
        const Scalar t = k * dt;
        const Vec3 r = loop.position(t) - p;
        const Scalar nr = r.norm();
        if (nr <= 1e-12)
        {
            throw SingularityError("biot_savart_eval: point lies on the loop");
        }
        total += r.cross(loop.velocity(t)) / (nr * nr * nr);
    }
    return 0.5 * dt * total;
}

Vec3 biot_savart_nearfield(const ClosedCurve3D& curve, const Vec3& p)
{
    curve.validate();
    const std::size_t n = curve.points.size();
    std::vector<Projection> proj(n);
    std::size_t best = 0;
    for (std::size_t i = 0; i < n; ++i)
    {
        proj[i] = project_to_segment(curve.points[i], curve.points[(i + 1) % n], p);
        if (proj[i].distance < proj[best].distance)
        {
            best = i;
        }
    }
    const Scalar dmin = proj[best].distance;
    if (dmin <= 1e-12)
    {
        throw SingularityError("biot_savart_nearfield: point lies on the curve");
    }
    const Scalar slack = 1e-10 * (1 + dmin);
    for (std::size_t i = 0; i < n; ++i)
    {
        if (proj[i].distance <= dmin + slack && (proj[i].point - proj[best].point).norm() > 1e-8 * (1 + dmin))
        {
            throw DomainError("biot_savart_nearfield: nearest curve point is not unique (segments " +
                              std::to_string(best) + " and " + std::to_string(i) + ")");
        }
    }
    const auto direction = [&](std::size_t i) {
        return Vec3((curve.points[(i + 1) % n] - curve.points[i]).normalized());
    };
    Vec3 tangent = direction(best);
    if (proj[best].t <= 0)
    {
        tangent = (tangent + direction((best + n - 1) % n)).normalized();
    }
    else if (proj[best].t >= 1)
    {
        tangent = (tangent + direction((best + 1) % n)).normalized();
    }
    const Vec3 r = proj[best].point - p;
    return r.cross(tangent) / r.squaredNorm();
}

ClosedCurve3D circle_polyline(Scalar radius, int segments)
{
    ClosedCurve3D c;
    c.points.reserve(segments);
    for (int k = 0; k < segments; ++k)
    {
        const Scalar a = 2 * pi * k / segments;
        c.points.emplace_back(radius * std::cos(a), radius * std::sin(a), 0);
    }
    return c;
}

ClosedCurve3D ball_diameter_loop(Scalar rho, int arc_segments)
{
    require_positive_rho(rho, "ball_diameter_loop");
    if (arc_segments < 2)
    {
        throw ArgumentError("ball_diameter_loop: need at least two arc segments");
    }
    ClosedCurve3D c;
    c.points.emplace_back(0, 0, -rho);
    c.points.emplace_back(0, 0, rho);
    const Scalar radius = std::sqrt(2.0) * rho;
    for (int k = 1; k < arc_segments; ++k)
    {
        const Scalar a = 0.75 * pi - 1.5 * pi * k / arc_segments;
        c.points.emplace_back(rho + radius * std::cos(a), 0, radius * std::sin(a));
    }
    return c;
}

namespace
{
// 1/2 int |X|^2 over { r_lo <= R <= r_hi } inside the ball, cylindrical coordinates about
// the diameter. The loop is symmetric under y -> -y, so only theta in [0, pi] is sampled.
Scalar shell_energy(const ClosedCurve3D& loop, Scalar rho_ball, Scalar r_lo, Scalar r_hi,
                    const COmegaOptions& options)
{
    const int order = std::max(4, static_cast<int>(std::lround(8 * options.resolution)));
    const int half_theta = std::max(4, static_cast<int>(std::lround(16 * options.resolution)));
    std::vector<Scalar> theta_w(half_theta + 1, 2.0);
    theta_w.front() = theta_w.back() = 1.0;
    std::vector<Scalar> cos_t(half_theta + 1), sin_t(half_theta + 1);
    for (int j = 0; j <= half_theta; ++j)
    {
        cos_t[j] = std::cos(pi * j / half_theta);
        sin_t[j] = std::sin(pi * j / half_theta);
    }
    const Scalar dtheta = pi / half_theta;

    const Scalar log_span = std::log(r_hi / r_lo);
    const int r_panels = std::max(1, static_cast<int>(std::ceil(options.resolution * log_span / std::log(2.0))));
    Scalar total = 0;
    for (int pr = 0; pr < r_panels; ++pr)
    {
        const Scalar t0 = std::log(r_lo) + log_span * pr / r_panels;
        const Scalar t1 = std::log(r_lo) + log_span * (pr + 1) / r_panels;
        const quad::Rule rr = quad::gauss_legendre(order, t0, t1);
        for (std::size_t ir = 0; ir < rr.nodes.size(); ++ir)
        {
            const Scalar R = std::exp(rr.nodes[ir]);
            const Scalar zmax = std::sqrt(std::max(rho_ball * rho_ball - R * R, Scalar(0)));
            // Panels in zeta = Z / zmax graded geometrically toward the poles.
            std::vector<Scalar> breaks{0};
            Scalar width = 0.5;
            while (width > R / (4 * rho_ball) && breaks.size() < 60)
            {
                breaks.push_back(breaks.back() + width);
                width *= 0.5;
            }
            breaks.push_back(1);
            Scalar column = 0;
            for (std::size_t pz = 0; pz + 1 < breaks.size(); ++pz)
            {
                const quad::Rule rz = quad::gauss_legendre(order, breaks[pz], breaks[pz + 1]);
                for (std::size_t iz = 0; iz < rz.nodes.size(); ++iz)
                {
                    for (int sign : {-1, 1})
                    {
                        const Scalar Z = sign * zmax * rz.nodes[iz];
                        Scalar ring = 0;
                        for (int j = 0; j <= half_theta; ++j)
                        {
                            const Vec3 p(R * cos_t[j], R * sin_t[j], Z);
                            ring += theta_w[j] * biot_savart_eval(loop, p, options.multiplicity).squaredNorm();
                        }
                        column += rz.weights[iz] * zmax * ring * dtheta;
                    }
                }
            }
            // dR = R dt, volume element R dR dtheta dZ.
            total += rr.weights[ir] * R * R * column;
        }
    }
    return 0.5 * total;
}

} // namespace

COmegaReport c_omega_estimate(const BallGeometry& ball, const std::vector<Scalar>& rho_cuts,
                              const COmegaOptions& options)
{
    require_positive_rho(ball.rho, "c_omega_estimate");
    if (rho_cuts.size() < 3)
    {
        throw ArgumentError("c_omega_estimate: need at least three cut radii");
    }
    for (std::size_t i = 0; i < rho_cuts.size(); ++i)
    {
        if (!(rho_cuts[i] > 0) || !(rho_cuts[i] < ball.rho) || (i > 0 && !(rho_cuts[i] < rho_cuts[i - 1])))
        {
            throw ArgumentError("c_omega_estimate: cut radii must be decreasing within (0, rho)");
        }
    }
    const ClosedCurve3D loop = ball_diameter_loop(ball.rho, options.arc_segments);
    const Scalar length = 2 * ball.rho;

    COmegaReport report;
    Scalar energy = 0;
    Scalar upper = ball.rho;
    for (Scalar cut : rho_cuts)
    {
        energy += shell_energy(loop, ball.rho, cut, upper, options);
        upper = cut;
        report.rho.push_back(cut);
        report.energy.push_back(energy);
        report.counterterm.push_back(pi * length * std::log(cut));
        report.sum.push_back(energy + report.counterterm.back());
    }
    const std::size_t n = report.sum.size();
    for (std::size_t i = 2; i < n; ++i)
    {
        const Scalar prev = std::abs(report.sum[i - 1] - report.sum[i - 2]);
        const Scalar next = std::abs(report.sum[i] - report.sum[i - 1]);
        if (!(next < prev))
        {
            std::ostringstream msg;
            msg.precision(10);
            msg << "c_omega_estimate: successive differences do not decrease; sequence (rho, sum):";
            for (std::size_t k = 0; k < n; ++k)
            {
                msg << " (" << report.rho[k] << ", " << report.sum[k] << ")";
            }
            throw ConvergenceError(msg.str());
        }
    }
    const Scalar r1 = report.rho[n - 2];
    const Scalar r2 = report.rho[n - 1];
    report.extrapolated = (r1 * report.sum[n - 1] - r2 * report.sum[n - 2]) / (r1 - r2);
    return report;
}

} // namespace vfe
