#pragma once

// Far-field coefficient F^beta(theta, omega, p), the stationary-phase engine
// for sphere integrals int_Sigma B exp(i Lambda Phi) dS on Sigma = S^d x S^n,
// the Hessian signature check and log-log rate fitting.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "charwave/errors.hpp"
#include "charwave/geometry.hpp"
#include "charwave/parallel.hpp"
#include "charwave/propagator.hpp"
#include "charwave/quadrature.hpp"
#include "charwave/spectral_data.hpp"

namespace charwave
{

/// G(r) = exp(i sgn(r) pi (n - d)/4) sgn(r)^{|beta|} |r|^{N/2 + |beta|} / (2 (2pi)^{N/2 + 1}).
inline cplx G_factor(double r, const Dims& dims, const MultiIndex& beta)
{
    if (r == 0.0 || !std::isfinite(r))
        throw DomainError("G_factor: r must be nonzero and finite");
    if (!(beta.dims() == dims))
        throw DomainError("G_factor: multi-index dimension mismatch");
    const double sg = r > 0.0 ? 1.0 : -1.0;
    const int b = beta.order();
    const double N = dims.N();
    const double mag = std::pow(std::abs(r), 0.5 * N + b) / (2.0 * std::pow(2.0 * std::numbers::pi, 0.5 * N + 1.0));
    const double sign_b = (b % 2 == 1) ? sg : 1.0;
    return std::polar(sign_b * mag, sg * std::numbers::pi * (dims.n() - dims.d()) / 4.0);
}

struct AsymptoticCoefficient
{
    cplx value;
    MultiIndex beta;
    DirectionPair dir;
    double p = 0.0;
    double quad_error = 0.0;
    std::size_t evaluations = 0;
};

struct CoefficientOptions
{
    double abs_tol = 1e-15;
    double rel_tol = 1e-13;
    std::size_t max_panels = 100000;
};

/// Panel boundaries of the r-support of vt0(r c, r theta-bar, r omega-bar),
/// c = theta0 + omega0, with seams as breakpoints and panels no longer than
/// one period of exp(i r p).
inline std::vector<double> coefficient_breakpoints(const SpectralProfile& profile, const DirectionPair& dir, double p)
{
    const auto& sup = profile.support();
    const double c = dir.transversality();
    const double ac = std::abs(c);
    std::vector<double> out;
    for (double sign : {-1.0, 1.0}) {
        // lambda = r c must have the sign of a supported band
        if (!sup.two_sided && sign * c < 0.0)
            continue;
        const double lo = sup.lambda_min / ac;
        double hi = sup.lambda_max / ac;
        std::vector<double> pts{lo, hi};
        for (double b : sup.lambda_breaks)
            pts.push_back(b / ac);
        auto transverse = [&](const Vec& v) {
            for (std::size_t k = 1; k < v.size(); ++k)
                if (v[k] != 0.0) {
                    hi = std::min(hi, sup.transverse_radius / std::abs(v[k]));
                    for (double b : sup.transverse_breaks)
                        pts.push_back(b / std::abs(v[k]));
                }
        };
        transverse(dir.theta());
        transverse(dir.omega());
        if (!(hi > lo))
            continue;
        pts = quad::clean_breakpoints(std::move(pts), lo, hi);
        pts = quad::subdivide(pts, p != 0.0 ? 2.0 * std::numbers::pi / std::abs(p) : 0.0);
        if (sign < 0.0) {
            std::vector<double> neg;
            for (auto it = pts.rbegin(); it != pts.rend(); ++it)
                neg.push_back(-*it);
            out.insert(out.begin(), neg.begin(), neg.end());
        }
        else {
            out.insert(out.end(), pts.begin(), pts.end());
        }
    }
    return out;
}

/// F^beta(theta, omega, p) = P^beta(theta, omega) |theta0 + omega0|
///     int exp(i r p) G(r) vt0(r(theta0 + omega0), r theta-bar, r omega-bar) dr.
inline AsymptoticCoefficient coefficient_F(const SpectralProfile& profile, const MultiIndex& beta, const DirectionPair& dir, double p,
                                           const CoefficientOptions& opt = {})
{
    const Dims& dims = profile.dims();
    if (!(dir.dims() == dims) || !(beta.dims() == dims))
        throw DomainError("coefficient_F: dimension mismatch");
    const double c = dir.transversality();
    const std::span<const double> tb(dir.theta().data() + 1, dims.d());
    const std::span<const double> ob(dir.omega().data() + 1, dims.n());
    Vec xi(dims.d()), eta(dims.n());
    auto f = [&](double r) -> cplx {
        if (r == 0.0)
            return 0.0;
        for (int k = 0; k < dims.d(); ++k)
            xi[k] = r * tb[k];
        for (int k = 0; k < dims.n(); ++k)
            eta[k] = r * ob[k];
        const cplx v = profile(r * c, xi, eta);
        if (v == 0.0)
            return 0.0;
        return std::polar(1.0, r * p) * G_factor(r, dims, beta) * v;
    };
    const auto br = coefficient_breakpoints(profile, dir, p);
    quad::Options qo;
    qo.abs_tol = opt.abs_tol;
    qo.rel_tol = opt.rel_tol;
    qo.max_panels = opt.max_panels;
    auto r = quad::integrate_or_throw<cplx>(f, br, qo, "coefficient_F");
    const cplx pre = symbol_P_beta(beta, dir) * std::abs(c);
    return {pre * r.value, beta, dir, p, std::abs(pre) * r.est_error, r.evaluations};
}

/// Amplitude on Sigma, B(zeta, sigma).
using SphereAmplitude = std::function<cplx(std::span<const double>, std::span<const double>)>;

/// An amplitude that vanishes outside geodesic balls of `radius` (product
/// metric on Sigma) around the enabled stationary points (theta, omega)
/// (plus) and (-theta, -omega) (minus).
struct LocalAmplitude
{
    SphereAmplitude B;
    double radius = 0.35;
    bool plus = true;
    bool minus = true;
};

namespace detail
{

inline double geodesic(std::span<const double> a, std::span<const double> b, double sign)
{
    double c = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        c += a[i] * b[i];
    return std::acos(std::clamp(sign * c, -1.0, 1.0));
}

/// exp(1 - 1/(1 - x^2)) on |x| < 1: C-infinity, equal to 1 at 0.
inline double smooth_bump(double x)
{
    if (std::abs(x) >= 1.0)
        return 0.0;
    return std::exp(1.0 - 1.0 / (1.0 - x * x));
}

/// Orthonormal vectors completing c to a basis.
inline std::vector<Vec> tangent_basis(const Vec& c)
{
    std::vector<Vec> basis;
    for (std::size_t k = 0; k < c.size() && basis.size() + 1 < c.size(); ++k) {
        Vec e(c.size(), 0.0);
        e[k] = 1.0;
        auto project = [&](const Vec& v) {
            const double s = dot(e, v);
            for (std::size_t i = 0; i < e.size(); ++i)
                e[i] -= s * v[i];
        };
        project(c);
        for (const auto& b : basis)
            project(b);
        const double n = norm(e);
        if (n < 1e-6)
            continue;
        for (double& v : e)
            v /= n;
        basis.push_back(e);
    }
    return basis;
}

struct ChartNode
{
    Vec point;
    double weight;
    double dist; // geodesic distance to the centre
};

/// Quadrature nodes on the geodesic ball of radius rho around c in S^k
/// (k = 1, 2), in geodesic polar coordinates: composite Gauss-Legendre in the
/// distance (panels short enough for exp(i Lambda cos rho)) and trapezoid in
/// the azimuth.
inline std::vector<ChartNode> ball_nodes(const Vec& c, double rho, std::size_t panels, std::size_t azimuth)
{
    const auto E = tangent_basis(c);
    const auto gl = quad::gauss_legendre(16);
    std::vector<ChartNode> out;
    const std::size_t k = c.size() - 1;
    const double lo = k == 1 ? -rho : 0.0;
    if (k == 1)
        panels *= 2;
    const double h = (rho - lo) / static_cast<double>(panels);
    for (std::size_t pnl = 0; pnl < panels; ++pnl) {
        const double a = lo + h * static_cast<double>(pnl);
        for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
            const double s = a + 0.5 * h * (gl.nodes[i] + 1.0);
            const double w = 0.5 * h * gl.weights[i];
            if (k == 1) {
                Vec p(c.size());
                for (std::size_t m = 0; m < c.size(); ++m)
                    p[m] = std::cos(s) * c[m] + std::sin(s) * E[0][m];
                out.push_back({std::move(p), w, std::abs(s)});
                continue;
            }
            const double da = 2.0 * std::numbers::pi / static_cast<double>(azimuth);
            for (std::size_t j = 0; j < azimuth; ++j) {
                const double al = da * static_cast<double>(j);
                Vec p(c.size());
                for (std::size_t m = 0; m < c.size(); ++m)
                    p[m] = std::cos(s) * c[m] + std::sin(s) * (std::cos(al) * E[0][m] + std::sin(al) * E[1][m]);
                out.push_back({std::move(p), w * std::sin(s) * da, s});
            }
        }
    }
    return out;
}

} // namespace detail

/// B(zeta, sigma) = kappa * 2pi |lambda| P^beta(r zeta, r sigma) vt0(lambda, r zeta-bar, r sigma-bar),
/// lambda = r (zeta0 + sigma0): the cone amplitude on the sphere of radius r,
/// localised by a C-infinity bump kappa of the distance to the stationary points.
inline LocalAmplitude make_profile_amplitude(const SpectralProfile& profile, const MultiIndex& beta, double r, const DirectionPair& dir,
                                             double radius, bool plus = true, bool minus = true)
{
    if (!(r > 0.0) || !(radius > 0.0) || radius >= std::numbers::pi / 2)
        throw DomainError("make_profile_amplitude: need r > 0 and 0 < radius < pi/2");
    LocalAmplitude amp;
    amp.radius = radius;
    amp.plus = plus;
    amp.minus = minus;
    const Dims dims = profile.dims();
    amp.B = [profile, beta, r, dir, radius, plus, minus, dims](std::span<const double> zeta, std::span<const double> sigma) -> cplx {
        double kappa = 0.0;
        for (double s : {1.0, -1.0}) {
            if ((s > 0 && !plus) || (s < 0 && !minus))
                continue;
            const double a = detail::geodesic(zeta, dir.theta(), s);
            const double b = detail::geodesic(sigma, dir.omega(), s);
            kappa += detail::smooth_bump(std::sqrt(a * a + b * b) / radius);
        }
        if (kappa == 0.0)
            return 0.0;
        Vec xi(zeta.begin(), zeta.end()), eta(sigma.begin(), sigma.end());
        for (double& v : xi)
            v *= r;
        for (double& v : eta)
            v *= r;
        const double lambda = xi[0] + eta[0];
        const cplx v = profile(lambda, std::span<const double>(xi).subspan(1), std::span<const double>(eta).subspan(1));
        if (v == 0.0)
            return 0.0;
        return kappa * 2.0 * std::numbers::pi * std::abs(lambda) * symbol_at(beta, xi, eta) * v;
    };
    return amp;
}

struct SphereIntegralResult
{
    cplx value;
    double est_error = 0.0;
    std::size_t nodes = 0;
};

/// int_Sigma B exp(i Lambda Phi) dS for a localised amplitude, by product
/// quadrature in geodesic polar charts centred at the stationary points. The
/// error estimate is the change under doubling the radial panels.
inline SphereIntegralResult sphere_integral_brute(const LocalAmplitude& amp, const DirectionPair& dir, double Lambda)
{
    if (!(Lambda > 0.0))
        throw DomainError("sphere_integral_brute: Lambda must be positive");
    const double rho = amp.radius;
    auto run = [&](std::size_t panels) {
        std::vector<cplx> parts;
        std::size_t count = 0;
        for (double s : {1.0, -1.0}) {
            if ((s > 0 && !amp.plus) || (s < 0 && !amp.minus))
                continue;
            Vec ct = dir.theta(), co = dir.omega();
            for (double& v : ct)
                v *= s;
            for (double& v : co)
                v *= s;
            const auto A = detail::ball_nodes(ct, rho, panels, 16);
            const auto B = detail::ball_nodes(co, rho, panels, 16);
            std::vector<cplx> row;
            for (const auto& a : A) {
                cplx acc = 0.0;
                for (const auto& b : B) {
                    if (a.dist * a.dist + b.dist * b.dist >= rho * rho)
                        continue;
                    const cplx v = amp.B(a.point, b.point);
                    if (v == 0.0)
                        continue;
                    acc += b.weight * v * std::polar(1.0, Lambda * phase_Phi(a.point, b.point, dir));
                    ++count;
                }
                row.push_back(a.weight * acc);
            }
            parts.push_back(quad::pairwise_sum<cplx>(row));
        }
        return std::pair{quad::pairwise_sum<cplx>(parts), count};
    };
    // one panel per period of Lambda (1 - cos rho) ~ Lambda rho^2 / 2
    const std::size_t m = 2 + static_cast<std::size_t>(std::ceil(Lambda * rho * rho / (4.0 * std::numbers::pi)));
    auto [coarse, n1] = run(m);
    auto [fine, n2] = run(2 * m);
    return {fine, std::abs(fine - coarse), n1 + n2};
}

struct StationaryLeading
{
    cplx value;
    bool in_support = true;
};

/// (2pi/Lambda)^{N/2} exp(+-i pi (n - d)/4) B(+-theta, +-omega).
inline StationaryLeading sphere_stationary_phase_leading(const SphereAmplitude& B, const DirectionPair& dir, double Lambda, int branch)
{
    if (!(Lambda > 0.0))
        throw DomainError("sphere_stationary_phase_leading: Lambda must be positive");
    if (branch != 1 && branch != -1)
        throw DomainError("sphere_stationary_phase_leading: branch must be +1 or -1");
    const Dims dims = dir.dims();
    Vec t = dir.theta(), o = dir.omega();
    for (double& v : t)
        v *= branch;
    for (double& v : o)
        v *= branch;
    const cplx b = B(t, o);
    if (b == 0.0)
        return {0.0, false};
    const double mag = std::pow(2.0 * std::numbers::pi / Lambda, 0.5 * dims.N());
    return {std::polar(mag, branch * std::numbers::pi * (dims.n() - dims.d()) / 4.0) * b, true};
}

struct HessianCheck
{
    cplx factor;       // exp(i pi sig / 4)
    int signature = 0; // (#positive - #negative) eigenvalues
    double determinant = 0.0;
    double gradient_norm = 0.0;
    std::vector<double> eigenvalues;
};

/// Finite-difference Hessian of Phi restricted to Sigma at (+-theta, +-omega)
/// in the chart u -> (c + sum u_k e_k)/|...| on each factor.
inline HessianCheck hessian_phase_factor(const DirectionPair& dir, int branch, double h = 1e-4)
{
    if (branch != 1 && branch != -1)
        throw DomainError("hessian_phase_factor: branch must be +1 or -1");
    Vec ct = dir.theta(), co = dir.omega();
    for (double& v : ct)
        v *= branch;
    for (double& v : co)
        v *= branch;
    const auto Et = detail::tangent_basis(ct);
    const auto Eo = detail::tangent_basis(co);
    const std::size_t d = Et.size(), n = Eo.size(), N = d + n;

    auto chart = [](const Vec& c, const std::vector<Vec>& E, const double* u) {
        Vec p = c;
        for (std::size_t k = 0; k < E.size(); ++k)
            for (std::size_t m = 0; m < p.size(); ++m)
                p[m] += u[k] * E[k][m];
        const double nn = norm(p);
        for (double& v : p)
            v /= nn;
        return p;
    };
    auto f = [&](const std::vector<double>& u) {
        return phase_Phi(chart(ct, Et, u.data()), chart(co, Eo, u.data() + d), dir);
    };

    std::vector<double> u(N, 0.0);
    const double f0 = f(u);
    Eigen::MatrixXd H(N, N);
    Eigen::VectorXd g(N);
    for (std::size_t i = 0; i < N; ++i) {
        auto up = u, um = u;
        up[i] += h;
        um[i] -= h;
        const double fp = f(up), fm = f(um);
        g(i) = (fp - fm) / (2 * h);
        H(i, i) = (fp - 2 * f0 + fm) / (h * h);
        for (std::size_t j = 0; j < i; ++j) {
            auto a = u, b = u, c = u, e = u;
            a[i] += h, a[j] += h;
            b[i] += h, b[j] -= h;
            c[i] -= h, c[j] += h;
            e[i] -= h, e[j] -= h;
            H(i, j) = H(j, i) = (f(a) - f(b) - f(c) + f(e)) / (4 * h * h);
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
    HessianCheck out;
    out.gradient_norm = g.norm();
    out.determinant = H.determinant();
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        const double ev = es.eigenvalues()(i);
        out.eigenvalues.push_back(ev);
        out.signature += ev > 0 ? 1 : -1;
    }
    if (!(std::abs(out.determinant) > 1e-8))
        throw DomainError("hessian_phase_factor: degenerate Hessian at the stationary point (det = " +
                          std::to_string(out.determinant) + ")");
    out.factor = std::polar(1.0, std::numbers::pi * out.signature / 4.0);
    return out;
}

struct RateFitReport
{
    std::vector<std::pair<double, double>> samples; // (tau, error)
    double slope = 0.0;
    double intercept = 0.0;
    double residual = 0.0; // RMS deviation in log space
};

/// Least-squares fit of log(error) = intercept + slope log(tau).
inline RateFitReport fit_decay_rate(std::vector<std::pair<double, double>> samples, std::size_t min_samples = 4)
{
    if (samples.size() < std::max<std::size_t>(2, min_samples))
        throw DomainError("fit_decay_rate: need at least " + std::to_string(std::max<std::size_t>(2, min_samples)) + " samples");
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (!(samples[i].second > 0.0))
            throw DomainError("fit_decay_rate: errors must be positive");
        if (!(samples[i].first > 0.0) || (i > 0 && !(samples[i].first > samples[i - 1].first)))
            throw DomainError("fit_decay_rate: tau must be positive and strictly increasing");
    }
    const double m = static_cast<double>(samples.size());
    double sx = 0, sy = 0;
    for (auto [t, e] : samples) {
        sx += std::log(t);
        sy += std::log(e);
    }
    const double mx = sx / m, my = sy / m;
    double sxx = 0, sxy = 0;
    for (auto [t, e] : samples) {
        const double dx = std::log(t) - mx;
        sxx += dx * dx;
        sxy += dx * (std::log(e) - my);
    }
    RateFitReport rep;
    rep.slope = sxy / sxx;
    rep.intercept = my - rep.slope * mx;
    double ss = 0;
    for (auto [t, e] : samples) {
        const double r = std::log(e) - rep.intercept - rep.slope * std::log(t);
        ss += r * r;
    }
    rep.residual = std::sqrt(ss / m);
    rep.samples = std::move(samples);
    return rep;
}

struct TheoremRow
{
    double tau = 0.0;
    cplx du;      // d^beta u at the line point
    cplx leading; // tau^{-N/2} F^beta
    double err = 0.0;
    double quad_error = 0.0;
};

struct TheoremReport
{
    AsymptoticCoefficient F;
    std::vector<TheoremRow> rows;
    RateFitReport remainder; // log err vs log tau
    RateFitReport leading;   // log |d^beta u| vs log tau
};

struct TheoremOptions
{
    PointOptions point;
    CoefficientOptions coefficient;
    unsigned threads = 1;
};

/// Samples d^beta u along the line, subtracts tau^{-N/2} F^beta(theta, omega, p)
/// and fits both the remainder and the leading decay.
inline TheoremReport verify_theorem(const SpectralProfile& profile, const CharacteristicLine& line, const MultiIndex& beta,
                                    const std::vector<double>& taus, const TheoremOptions& opt = {})
{
    if (taus.size() < 4)
        throw DomainError("verify_theorem: the tau grid needs at least 4 values");
    for (std::size_t i = 0; i < taus.size(); ++i)
        if (!(taus[i] > 0.0) || (i > 0 && !(taus[i] > taus[i - 1])))
            throw DomainError("verify_theorem: tau grid must be positive and increasing");
    const Dims& dims = profile.dims();
    TheoremReport rep{coefficient_F(profile, beta, line.dir(), shift_parameter(line), opt.coefficient), {}, {}, {}};
    const cplx F = rep.F.value;
    auto rows = parallel_map<TheoremRow>(taus.size(), opt.threads, [&](std::size_t i) {
        const double tau = taus[i];
        auto v = evaluate_dbeta_u_point(profile, line_point(line, tau), beta, opt.point);
        TheoremRow row;
        row.tau = tau;
        row.du = v.value;
        row.leading = std::pow(tau, -0.5 * dims.N()) * F;
        row.err = std::abs(v.value - row.leading);
        row.quad_error = v.est_error;
        return row;
    });
    bool all_zero = true;
    for (const auto& r : rows)
        all_zero = all_zero && r.du == 0.0 && r.leading == 0.0;
    if (all_zero)
        throw DomainError("verify_theorem: zero data, nothing to fit");
    std::vector<std::pair<double, double>> rem, lead;
    for (const auto& r : rows) {
        rem.emplace_back(r.tau, r.err);
        lead.emplace_back(r.tau, std::abs(r.du));
    }
    rep.rows = std::move(rows);
    rep.remainder = fit_decay_rate(rem);
    rep.leading = fit_decay_rate(lead);
    return rep;
}

} // namespace charwave
