#pragma once

// Direct quadrature of the cone representation in the spherical chart, the
// dyadic window and Littlewood-Paley shell integrals.
//
//   d^beta u(x, y) = (2pi)^{-N-1} int_C |xi0 + eta0| P(xi, eta) vt0(xi0 + eta0, xi-bar, eta-bar)
//                    exp(i(x.xi - y.eta)) dS,    dS = (1/2) r^{N-1} dr dS_zeta dS_sigma.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "charwave/errors.hpp"
#include "charwave/geometry.hpp"
#include "charwave/quadrature.hpp"
#include "charwave/spectral_data.hpp"

namespace charwave
{

/// chi~(rho) = phi(log2 rho), phi(u) = S(1 - |u|) with the order-7 smoothstep S.
/// Since S(v) + S(1 - v) = 1, neighbouring windows sum to one and exactly two
/// of them overlap any rho.
inline double dyadic_window(double rho)
{
    if (!(rho > 0.5) || !(rho < 2.0))
        return 0.0;
    return smoothstep7(1.0 - std::abs(std::log2(rho)));
}

struct DyadicPartition
{
    std::function<double(double)> window = dyadic_window;
    int j_min = -40;
    int j_max = 40;
    int overlap = 2;

    /// chi~(2^{-j} rho).
    double shell(int j, double rho) const { return window(std::ldexp(rho, -j)); }

    /// Sum over j_range of chi~(2^{-j} rho).
    double partial_sum(double rho) const
    {
        // only the two shells around log2(rho) can be nonzero
        const int j0 = static_cast<int>(std::floor(std::log2(rho)));
        double s = 0.0;
        for (int j = std::max(j_min, j0 - 1); j <= std::min(j_max, j0 + 2); ++j)
            s += shell(j, rho);
        return s;
    }
};

inline DyadicPartition make_dyadic_window(int j_min = -40, int j_max = 40)
{
    if (j_min > j_max)
        throw DomainError("make_dyadic_window: empty shell range");
    DyadicPartition p;
    p.j_min = j_min;
    p.j_max = j_max;
    return p;
}

/// Product rule on a sphere S^1 or S^2.
struct SphereRule
{
    std::vector<Vec> points;
    std::vector<double> weights;
};

/// S^1: n-point trapezoid starting at angle offset*2pi/n.
/// S^2: n/2 Gauss-Legendre nodes in cos(polar) times n-point trapezoid in azimuth.
inline SphereRule sphere_rule(int sphere_dim, std::size_t n, double offset = 0.0)
{
    if (n < 2)
        throw DomainError("sphere_rule: need at least two nodes");
    SphereRule rule;
    const double h = 2.0 * std::numbers::pi / static_cast<double>(n);
    if (sphere_dim == 1) {
        for (std::size_t j = 0; j < n; ++j) {
            const double a = (static_cast<double>(j) + offset) * h;
            rule.points.push_back({std::cos(a), std::sin(a)});
            rule.weights.push_back(h);
        }
        return rule;
    }
    if (sphere_dim == 2) {
        const auto gl = quad::gauss_legendre(std::max<std::size_t>(2, n / 2));
        for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
            const double polar = std::acos(gl.nodes[i]);
            for (std::size_t j = 0; j < n; ++j) {
                const double az = (static_cast<double>(j) + offset) * h;
                const double ang[2] = {polar, az};
                rule.points.push_back(unit_from_angles(2, ang));
                rule.weights.push_back(gl.weights[i] * h);
            }
        }
        return rule;
    }
    throw DomainError("sphere_rule: only S^1 and S^2 are implemented");
}

struct ConeQuadOptions
{
    /// S^1 node count (S^2 uses n/2 x n); 0 selects it by doubling until two
    /// consecutive results differ by at most angular_tol.
    std::size_t angular_nodes = 0;
    std::size_t min_angular_nodes = 64;
    std::size_t max_angular_nodes = 2048;
    double angular_tol = 1e-10;
    /// Absolute tolerance of each radial integral (before the angular weights).
    double radial_tol = 1e-13;
    /// Rotation of every trapezoid origin, as a fraction of one step.
    double angular_offset = 0.0;
};

struct ConeIntegralResult
{
    cplx value;
    double est_error = 0.0;
    std::size_t node_count = 0;
    std::size_t angular_nodes = 0;
    /// Radius beyond which the amplitude vanishes on C.
    double support_radius = 0.0;
    /// Bound on the part of the integral beyond r_max.
    double tail_estimate = 0.0;
    bool tail_flagged = false;
};

struct ShellIntegralResult
{
    int j = 0;
    cplx value;
    std::size_t node_count = 0;
    double est_error = 0.0;
};

namespace detail
{

/// Largest r on C where vt0(xi0 + eta0, xi-bar, eta-bar) can be nonzero.
inline double cone_support_radius(const SpectralProfile& profile)
{
    const auto& s = profile.support();
    const Dims& dims = profile.dims();
    const double R = s.transverse_radius;
    // |xi0|, |eta0| <= (lambda_max + N R^2 / lambda_min) / 2
    const double z0 = 0.5 * (s.lambda_max + dims.N() * R * R / s.lambda_min);
    return std::sqrt(z0 * z0 + std::min(dims.d(), dims.n()) * R * R);
}

/// Smallest r on C where the amplitude can be nonzero (|xi0 + eta0| <= 2r).
inline double cone_inner_radius(const SpectralProfile& profile) { return 0.5 * profile.support().lambda_min; }

/// sup |vt0| estimated on a deterministic sample of the support box.
inline double sample_sup(const SpectralProfile& profile)
{
    const auto& s = profile.support();
    const Dims& dims = profile.dims();
    double sup = 0.0;
    const int m = 9;
    std::vector<double> xi(dims.d()), eta(dims.n());
    std::vector<int> idx(dims.N(), 0);
    for (int li = 0; li <= 4 * m; ++li) {
        const double l = s.lambda_min + (s.lambda_max - s.lambda_min) * li / (4.0 * m);
        std::fill(idx.begin(), idx.end(), 0);
        while (true) {
            for (int k = 0; k < dims.N(); ++k) {
                const double v = s.transverse_radius * (2.0 * idx[k] / m - 1.0);
                (k < dims.d() ? xi[k] : eta[k - dims.d()]) = v;
            }
            sup = std::max(sup, std::abs(profile(l, xi, eta)));
            int k = 0;
            while (k < dims.N() && ++idx[k] > m)
                idx[k++] = 0;
            if (k == dims.N())
                break;
        }
    }
    return sup;
}

struct RadialWindow
{
    double rho_lo = 0.0;
    double rho_hi = 0.0;
    double scale = 1.0;
    std::function<double(double)> window; // empty = 1
    std::vector<double> window_breaks;
};

/// sum over the angle grid of weight * int (1/2) rho^{N-1} |lambda| P vt0 exp(i scale rho (x.zeta - y.sigma)) w(rho) drho
/// with lambda = scale * rho * (zeta0 + sigma0).
inline quad::Result<cplx> spherical_sum(const SpectralProfile& profile, const LightConePoint& pt, const MultiIndex& beta,
                                        const RadialWindow& rw, std::size_t n, const ConeQuadOptions& opt)
{
    const Dims& dims = profile.dims();
    const int N = dims.N();
    const auto& sup = profile.support();
    const auto Sd = sphere_rule(dims.d(), n, opt.angular_offset);
    const auto Sn = sphere_rule(dims.n(), n, opt.angular_offset);
    const bool has_beta = beta.order() > 0;

    Vec xi(dims.d() + 1), eta(dims.n() + 1);
    quad::Options ro;
    ro.abs_tol = opt.radial_tol;

    std::vector<cplx> partial;
    partial.reserve(Sd.points.size());
    quad::Result<cplx> out;
    out.converged = true;
    for (std::size_t a = 0; a < Sd.points.size(); ++a) {
        const Vec& zeta = Sd.points[a];
        std::vector<cplx> row;
        row.reserve(Sn.points.size());
        for (std::size_t b = 0; b < Sn.points.size(); ++b) {
            const Vec& sigma = Sn.points[b];
            const double c = zeta[0] + sigma[0];
            if (c == 0.0 || (!sup.two_sided && c < 0.0))
                continue;
            const double ac = std::abs(c);
            // physical radius interval where vt0 may be nonzero
            double r_lo = sup.lambda_min / ac;
            double r_hi = sup.lambda_max / ac;
            for (std::size_t k = 1; k < zeta.size(); ++k)
                if (zeta[k] != 0.0)
                    r_hi = std::min(r_hi, sup.transverse_radius / std::abs(zeta[k]));
            for (std::size_t k = 1; k < sigma.size(); ++k)
                if (sigma[k] != 0.0)
                    r_hi = std::min(r_hi, sup.transverse_radius / std::abs(sigma[k]));
            const double lo = std::max(rw.rho_lo, r_lo / rw.scale);
            const double hi = std::min(rw.rho_hi, r_hi / rw.scale);
            if (!(hi > lo))
                continue;

            std::vector<double> br{lo, hi};
            for (double lb : sup.lambda_breaks)
                br.push_back(lb / ac / rw.scale);
            for (double tb : sup.transverse_breaks) {
                for (std::size_t k = 1; k < zeta.size(); ++k)
                    if (zeta[k] != 0.0)
                        br.push_back(tb / std::abs(zeta[k]) / rw.scale);
                for (std::size_t k = 1; k < sigma.size(); ++k)
                    if (sigma[k] != 0.0)
                        br.push_back(tb / std::abs(sigma[k]) / rw.scale);
            }
            br.insert(br.end(), rw.window_breaks.begin(), rw.window_breaks.end());
            br = quad::clean_breakpoints(std::move(br), lo, hi);
            const double freq = rw.scale * std::abs(dot(pt.x, zeta) - dot(pt.y, sigma));
            br = quad::subdivide(br, freq > 0.0 ? 2.0 * std::numbers::pi / freq : 0.0);

            auto f = [&](double rho) -> cplx {
                const double r = rw.scale * rho;
                for (std::size_t k = 0; k < zeta.size(); ++k)
                    xi[k] = r * zeta[k];
                for (std::size_t k = 0; k < sigma.size(); ++k)
                    eta[k] = r * sigma[k];
                const double lambda = xi[0] + eta[0];
                const cplx v = profile(lambda, std::span<const double>(xi).subspan(1), std::span<const double>(eta).subspan(1));
                if (v == 0.0)
                    return 0.0;
                cplx amp = 0.5 * std::pow(rho, N - 1) * std::abs(lambda) * v;
                if (has_beta)
                    amp *= symbol_at(beta, xi, eta);
                if (rw.window)
                    amp *= rw.window(rho);
                return amp * std::polar(1.0, r * (dot(pt.x, zeta) - dot(pt.y, sigma)));
            };
            auto r = quad::integrate<cplx>(f, br, ro);
            out.evaluations += r.evaluations;
            out.est_error += Sd.weights[a] * Sn.weights[b] * r.est_error;
            out.converged = out.converged && r.converged;
            row.push_back(Sd.weights[a] * Sn.weights[b] * r.value);
        }
        partial.push_back(quad::pairwise_sum<cplx>(row));
    }
    out.value = quad::pairwise_sum<cplx>(partial);
    return out;
}

/// Runs spherical_sum at a fixed node count, or doubles from a starting count
/// derived from the phase bound until two consecutive values agree.
inline quad::Result<cplx> refined_spherical_sum(const SpectralProfile& profile, const LightConePoint& pt,
                                                const MultiIndex& beta, const RadialWindow& rw, const ConeQuadOptions& opt,
                                                std::size_t& nodes_used)
{
    if (opt.angular_nodes > 0) {
        nodes_used = opt.angular_nodes;
        auto r = spherical_sum(profile, pt, beta, rw, opt.angular_nodes, opt);
        if (!r.converged)
            throw ToleranceError("cone quadrature: radial integral did not converge", r.est_error);
        return r;
    }
    // the angular phase derivative is at most r (|x| + |y|)
    const double rmax = std::min(rw.rho_hi * rw.scale, cone_support_radius(profile));
    const double bound = rmax * (norm(pt.x) + norm(pt.y));
    std::size_t n = opt.min_angular_nodes;
    while (static_cast<double>(n) < 2.0 * bound + 32.0)
        n *= 2;
    auto prev = spherical_sum(profile, pt, beta, rw, n, opt);
    std::size_t evals = prev.evaluations;
    while (true) {
        if (2 * n > opt.max_angular_nodes)
            throw ToleranceError("cone quadrature: angular refinement budget exhausted at " + std::to_string(n) + " nodes",
                                 std::abs(prev.value));
        n *= 2;
        auto cur = spherical_sum(profile, pt, beta, rw, n, opt);
        evals += cur.evaluations;
        if (!cur.converged)
            throw ToleranceError("cone quadrature: radial integral did not converge", cur.est_error);
        const double diff = std::abs(cur.value - prev.value);
        if (diff <= opt.angular_tol) {
            nodes_used = n;
            cur.est_error += diff;
            cur.evaluations = evals;
            return cur;
        }
        prev = std::move(cur);
    }
}

} // namespace detail

/// The cone integral truncated to r <= r_max.
inline ConeIntegralResult direct_cone_integral(const SpectralProfile& profile, const LightConePoint& pt, const MultiIndex& beta,
                                               double r_max, const ConeQuadOptions& opt = {})
{
    if (!(r_max > 0.0))
        throw DomainError("direct_cone_integral: r_max must be positive");
    check_dims(pt, profile.dims());
    if (!(beta.dims() == profile.dims()))
        throw DomainError("direct_cone_integral: multi-index dimension mismatch");
    const int N = profile.dims().N();
    const double pref = std::pow(2.0 * std::numbers::pi, -(N + 1));

    detail::RadialWindow rw;
    rw.rho_lo = 0.0;
    rw.rho_hi = r_max;
    ConeIntegralResult out;
    auto r = detail::refined_spherical_sum(profile, pt, beta, rw, opt, out.angular_nodes);
    out.value = pref * r.value;
    out.est_error = pref * r.est_error;
    out.node_count = r.evaluations;
    out.support_radius = detail::cone_support_radius(profile);
    if (r_max < out.support_radius) {
        // |amplitude| <= lambda_max r^{|beta|} sup|vt0| times the measure of the
        // omitted part of C, (1/2)|S^d||S^n| (R^N - r_max^N)/N
        auto area = [](int k) { return k == 1 ? 2.0 * std::numbers::pi : 4.0 * std::numbers::pi; };
        const double R = out.support_radius;
        const double meas = 0.5 * area(profile.dims().d()) * area(profile.dims().n()) * (std::pow(R, N) - std::pow(r_max, N)) / N;
        out.tail_estimate = pref * profile.support().lambda_max * std::pow(R, beta.order()) * detail::sample_sup(profile) * meas;
        out.tail_flagged = out.tail_estimate > opt.angular_tol;
    }
    return out;
}

/// I_j(x, y) = int_C chi~(|(xi,eta)|/sqrt2) a^beta(2^j xi, 2^j eta) exp(i 2^j (x.xi - y.eta)) dS
/// with a^beta = P^beta * 2pi |xi0 + eta0| vt0(xi0 + eta0, xi-bar, eta-bar), over the annulus 1/2 <= r <= 2.
inline ShellIntegralResult shell_integral(const SpectralProfile& profile, const LightConePoint& pt, const MultiIndex& beta, int j,
                                          const DyadicPartition& partition, const ConeQuadOptions& opt = {})
{
    check_dims(pt, profile.dims());
    if (!(beta.dims() == profile.dims()))
        throw DomainError("shell_integral: multi-index dimension mismatch");
    detail::RadialWindow rw;
    rw.rho_lo = 0.5;
    rw.rho_hi = 2.0;
    rw.scale = std::ldexp(1.0, j);
    rw.window = partition.window;
    rw.window_breaks = {1.0};
    ShellIntegralResult out;
    out.j = j;
    const double rho_in = detail::cone_inner_radius(profile) / rw.scale;
    const double rho_out = detail::cone_support_radius(profile) / rw.scale;
    if (rho_out <= 0.5 || rho_in >= 2.0)
        return out; // the amplitude vanishes on the whole annulus
    std::size_t nodes = 0;
    auto r = detail::refined_spherical_sum(profile, pt, beta, rw, opt, nodes);
    out.value = 2.0 * std::numbers::pi * r.value;
    out.est_error = 2.0 * std::numbers::pi * r.est_error;
    out.node_count = r.evaluations;
    return out;
}

/// Shells whose annulus meets the support of the amplitude.
inline std::pair<int, int> active_shells(const SpectralProfile& profile)
{
    const double rin = detail::cone_inner_radius(profile);
    const double rout = detail::cone_support_radius(profile);
    // 2^{j-1} < rout and 2^{j+1} > rin
    const int jlo = static_cast<int>(std::floor(std::log2(rin))) - 1;
    const int jhi = static_cast<int>(std::ceil(std::log2(rout))) + 1;
    int a = jhi, b = jlo;
    for (int j = jlo; j <= jhi; ++j)
        if (std::ldexp(1.0, j - 1) < rout && std::ldexp(1.0, j + 1) > rin) {
            a = std::min(a, j);
            b = std::max(b, j);
        }
    return {a, b};
}

struct LpSeriesResult
{
    cplx value;
    double est_error = 0.0;
    std::vector<ShellIntegralResult> shells;
    std::vector<double> weighted_abs; // (2pi)^{-N-2} 2^{Nj} |I_j|
};

/// sum_j (2pi)^{-N-2} 2^{Nj} I_j, summed in increasing j.
inline LpSeriesResult lp_series_sum(const SpectralProfile& profile, const LightConePoint& pt, const MultiIndex& beta,
                                    const DyadicPartition& partition, const ConeQuadOptions& opt = {})
{
    if (std::abs(pt.x[0] + pt.y[0]) <= 1e-12)
        throw DomainError("lp_series_sum: the point lies on the initial hyperplane x0 + y0 = 0");
    const auto [ja, jb] = active_shells(profile);
    if (ja < partition.j_min || jb > partition.j_max)
        throw ConfigError("lp_series_sum: partition range [" + std::to_string(partition.j_min) + ", " +
                          std::to_string(partition.j_max) + "] does not cover the shells [" + std::to_string(ja) + ", " +
                          std::to_string(jb) + "] carrying amplitude");
    const int N = profile.dims().N();
    const double pref = std::pow(2.0 * std::numbers::pi, -(N + 2));
    LpSeriesResult out;
    std::vector<cplx> terms;
    for (int j = ja; j <= jb; ++j) {
        auto s = shell_integral(profile, pt, beta, j, partition, opt);
        const double w = pref * std::ldexp(1.0, N * j);
        terms.push_back(w * s.value);
        out.est_error += w * s.est_error;
        out.weighted_abs.push_back(w * std::abs(s.value));
        out.shells.push_back(s);
    }
    out.value = quad::pairwise_sum<cplx>(terms);
    return out;
}

struct ShellReportRow
{
    int j = 0;
    cplx value;          // I_j
    double weighted_abs; // |2^{Nj} I_j|
    std::size_t node_count = 0;
    double est_error = 0.0;
};

struct ShellDecayReport
{
    double tau = 0.0;
    int dominant_j = 0;
    /// Weighted magnitudes decrease monotonically in |j - dominant_j|.
    bool monotone_off_dominant = true;
    std::vector<ShellReportRow> rows;
};

inline ShellDecayReport shell_decay_report(const SpectralProfile& profile, const CharacteristicLine& line, const MultiIndex& beta,
                                           double tau, const DyadicPartition& partition, const ConeQuadOptions& opt = {})
{
    if (!(tau > 0.0))
        throw DomainError("shell_decay_report: tau must be positive");
    const auto pt = line_point(line, tau);
    const int N = profile.dims().N();
    ShellDecayReport rep;
    rep.tau = tau;
    for (int j = partition.j_min; j <= partition.j_max; ++j) {
        auto s = shell_integral(profile, pt, beta, j, partition, opt);
        rep.rows.push_back({j, s.value, std::ldexp(std::abs(s.value), N * j), s.node_count, s.est_error});
    }
    std::size_t dom = 0;
    for (std::size_t i = 0; i < rep.rows.size(); ++i)
        if (rep.rows[i].weighted_abs > rep.rows[dom].weighted_abs)
            dom = i;
    rep.dominant_j = rep.rows.empty() ? 0 : rep.rows[dom].j;
    for (std::size_t i = dom + 1; i < rep.rows.size(); ++i)
        if (rep.rows[i].weighted_abs > rep.rows[i - 1].weighted_abs)
            rep.monotone_off_dominant = false;
    for (std::size_t i = dom; i-- > 0;)
        if (rep.rows[i].weighted_abs > rep.rows[i + 1].weighted_abs)
            rep.monotone_off_dominant = false;
    return rep;
}

} // namespace charwave
