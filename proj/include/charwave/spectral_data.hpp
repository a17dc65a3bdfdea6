#pragma once

// Initial data v0 given through its (analytically evaluable) transform
//   vt0(lambda, xi-bar, eta-bar) = 2 * int exp(-i(s lambda + x.xi - y.eta)) v0 ds dx dy,
// pointwise reconstruction of v0 (and of the evolved field, which only adds
// a quadratic phase) by nested oscillatory quadrature, and the L2 norm.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "charwave/errors.hpp"
#include "charwave/geometry.hpp"
#include "charwave/quadrature.hpp"

namespace charwave
{

/// C^3 smoothstep of order 7: 0 on u <= 0, 1 on u >= 1, S(u) + S(1-u) = 1.
inline double smoothstep7(double u)
{
    if (u <= 0.0)
        return 0.0;
    if (u >= 1.0)
        return 1.0;
    if (u > 0.5)
        return 1.0 - smoothstep7(1.0 - u);
    const double u2 = u * u;
    return u2 * u2 * (35.0 + u * (-84.0 + u * (70.0 - 20.0 * u)));
}

/// Axis-aligned support box. The lambda support is [lambda_min, lambda_max]
/// (and its mirror image when two_sided); every transversal frequency
/// satisfies |xi_k|, |eta_k| <= transverse_radius.
struct SpectralSupport
{
    double lambda_min = 1.0;
    double lambda_max = 2.0;
    bool two_sided = false;
    double transverse_radius = 1.0;
    /// Points (positive side) where the data are less smooth; quadratures put
    /// panel boundaries there.
    std::vector<double> lambda_breaks;
    std::vector<double> transverse_breaks;

    bool contains_lambda(double lambda) const
    {
        const double a = two_sided ? std::abs(lambda) : lambda;
        return a >= lambda_min && a <= lambda_max;
    }

    /// Sorted breakpoints of the full lambda support (both sides if two_sided).
    std::vector<double> lambda_segments() const
    {
        std::vector<double> pts{lambda_min, lambda_max};
        pts.insert(pts.end(), lambda_breaks.begin(), lambda_breaks.end());
        if (two_sided) {
            const std::size_t m = pts.size();
            for (std::size_t i = 0; i < m; ++i)
                pts.push_back(-pts[i]);
        }
        std::sort(pts.begin(), pts.end());
        return pts;
    }

    std::vector<double> transverse_segments() const
    {
        std::vector<double> pts{-transverse_radius, 0.0, transverse_radius};
        for (double b : transverse_breaks) {
            pts.push_back(b);
            pts.push_back(-b);
        }
        return quad::clean_breakpoints(pts, -transverse_radius, transverse_radius);
    }
};

/// vt0 as a function with a declared compact support away from lambda = 0.
class SpectralProfile
{
public:
    using Eval = std::function<cplx(double, std::span<const double>, std::span<const double>)>;
    using Factor = std::function<cplx(double)>;

    /// vt0 = lambda_factor(lambda) * prod_k xi_factor(xi_k) * prod_k eta_factor(eta_k).
    struct Factors
    {
        Factor lambda;
        Factor xi;
        Factor eta;
    };

    SpectralProfile(Dims dims, SpectralSupport support, Eval eval, std::string smoothness, bool hermitian = false)
        : dims_(dims), support_(std::move(support)), eval_(std::move(eval)), smoothness_(std::move(smoothness)),
          hermitian_(hermitian)
    {
        validate();
    }

    SpectralProfile(Dims dims, SpectralSupport support, Factors factors, std::string smoothness, bool hermitian = false)
        : dims_(dims), support_(std::move(support)), factors_(std::make_shared<Factors>(std::move(factors))),
          smoothness_(std::move(smoothness)), hermitian_(hermitian)
    {
        validate();
        auto f = factors_;
        eval_ = [f](double lambda, std::span<const double> xi, std::span<const double> eta) {
            cplx v = f->lambda(lambda);
            for (double k : xi)
                v *= f->xi(k);
            for (double k : eta)
                v *= f->eta(k);
            return v;
        };
    }

    const Dims& dims() const noexcept { return dims_; }
    const SpectralSupport& support() const noexcept { return support_; }
    bool separable() const noexcept { return static_cast<bool>(factors_); }
    const Factors& factors() const
    {
        if (!factors_)
            throw DomainError("SpectralProfile: profile is not separable");
        return *factors_;
    }
    const std::string& smoothness_class() const noexcept { return smoothness_; }
    bool hermitian() const noexcept { return hermitian_; }

    bool in_support(double lambda, std::span<const double> xi, std::span<const double> eta) const
    {
        if (!support_.contains_lambda(lambda))
            return false;
        for (double k : xi)
            if (std::abs(k) > support_.transverse_radius)
                return false;
        for (double k : eta)
            if (std::abs(k) > support_.transverse_radius)
                return false;
        return true;
    }

    cplx operator()(double lambda, std::span<const double> xi, std::span<const double> eta) const
    {
        if (static_cast<int>(xi.size()) != dims_.d() || static_cast<int>(eta.size()) != dims_.n())
            throw DomainError("SpectralProfile: argument lengths do not match Dims");
        if (!in_support(lambda, xi, eta))
            return 0.0;
        return eval_(lambda, xi, eta);
    }

    /// c * vt0. Separable profiles stay separable.
    SpectralProfile scaled(cplx c) const
    {
        if (factors_) {
            Factors f = *factors_;
            auto lam = f.lambda;
            f.lambda = [lam, c](double l) { return c * lam(l); };
            return SpectralProfile(dims_, support_, std::move(f), smoothness_, hermitian_ && c.imag() == 0.0);
        }
        auto e = eval_;
        return SpectralProfile(
            dims_, support_, [e, c](double l, std::span<const double> x, std::span<const double> y) { return c * e(l, x, y); },
            smoothness_, hermitian_ && c.imag() == 0.0);
    }

    /// vt0 * m(lambda). Separable profiles stay separable.
    SpectralProfile modulated(Factor m) const
    {
        if (factors_) {
            Factors f = *factors_;
            auto lam = f.lambda;
            f.lambda = [lam, m](double l) { return m(l) * lam(l); };
            return SpectralProfile(dims_, support_, std::move(f), smoothness_, false);
        }
        auto e = eval_;
        return SpectralProfile(
            dims_, support_, [e, m](double l, std::span<const double> x, std::span<const double> y) { return m(l) * e(l, x, y); },
            smoothness_, false);
    }

    /// vt0 * w(lambda, xi, eta); the result is treated as non-separable.
    SpectralProfile reweighted(Eval w) const
    {
        auto e = eval_;
        return SpectralProfile(
            dims_, support_,
            [e, w](double l, std::span<const double> x, std::span<const double> y) { return w(l, x, y) * e(l, x, y); },
            smoothness_, false);
    }

    /// The same function without the separable fast path.
    SpectralProfile as_generic() const { return SpectralProfile(dims_, support_, eval_, smoothness_, hermitian_); }

private:
    void validate() const
    {
        if (!(support_.lambda_min > 0.0) || !(support_.lambda_max > support_.lambda_min))
            throw DomainError("SpectralProfile: lambda support must satisfy 0 < lambda_min < lambda_max");
        if (!(support_.transverse_radius > 0.0))
            throw DomainError("SpectralProfile: transverse radius must be positive");
    }

    Dims dims_;
    SpectralSupport support_;
    std::shared_ptr<Factors> factors_;
    Eval eval_;
    std::string smoothness_;
    bool hermitian_ = false;
};

struct BumpParams
{
    double lambda_min = 1.0;
    double lambda_max = 2.0;
    double width_a = 0.5;
    bool mirror = true;
    double amplitude = 1.0;
    /// The Gaussian is cut off smoothly between cut_inner*a and cut_outer*a.
    double cut_inner = 4.0;
    double cut_outer = 6.0;
};

/// Smoothstep hat on the lambda band times Gaussians with a compactly
/// supported cutoff in every transversal frequency.
inline SpectralProfile make_bump_profile(const Dims& dims, const BumpParams& p)
{
    if (!(p.lambda_min > 0.0) || !(p.lambda_max > p.lambda_min))
        throw DomainError("make_bump_profile: band must satisfy 0 < lambda_min < lambda_max");
    if (!(p.width_a > 0.0))
        throw DomainError("make_bump_profile: width a must be positive");
    if (!(p.cut_outer > p.cut_inner) || !(p.cut_inner > 0.0))
        throw DomainError("make_bump_profile: cutoff radii must satisfy 0 < inner < outer");

    const double lo = p.lambda_min;
    const double hi = p.lambda_max;
    const double amp = p.amplitude;
    const bool mirror = p.mirror;
    auto hat = [lo, hi](double l) {
        const double u = (l - lo) / (hi - lo);
        if (u <= 0.0 || u >= 1.0)
            return 0.0;
        return smoothstep7(std::min(2.0 * u, 2.0 - 2.0 * u));
    };
    SpectralProfile::Factor lambda_factor = [hat, amp, mirror](double l) -> cplx {
        if (l > 0.0)
            return amp * hat(l);
        // conj(amp * hat(-l)) with real hat and amplitude
        return mirror ? amp * hat(-l) : 0.0;
    };

    const double a = p.width_a;
    const double k1 = p.cut_inner * a;
    const double k2 = p.cut_outer * a;
    SpectralProfile::Factor gauss = [a, k1, k2](double k) -> cplx {
        const double ak = std::abs(k);
        if (ak >= k2)
            return 0.0;
        const double g = std::exp(-k * k / (2.0 * a * a));
        return ak <= k1 ? g : g * smoothstep7((k2 - ak) / (k2 - k1));
    };

    SpectralSupport sup;
    sup.lambda_min = lo;
    sup.lambda_max = hi;
    sup.two_sided = mirror;
    sup.transverse_radius = k2;
    sup.lambda_breaks = {0.5 * (lo + hi)};
    sup.transverse_breaks = {k1};
    return SpectralProfile(dims, std::move(sup), SpectralProfile::Factors{lambda_factor, gauss, gauss},
                           "C3 (order-7 smoothstep seams)", mirror);
}

/// vt0 identically zero (a bump with zero amplitude).
inline SpectralProfile make_zero_profile(const Dims& dims)
{
    BumpParams p;
    p.amplitude = 0.0;
    return make_bump_profile(dims, p);
}

/// A polynomial in (lambda, lambda^-1, xi-bar_k, eta-bar_k) that multiplies
/// the integrand of the inverse transform. Each term is
/// coeff * lambda^lambda_pow * prod xi_k^xi_pows[k] * prod eta_k^eta_pows[k].
struct SymbolPolynomial
{
    struct Term
    {
        cplx coeff;
        int lambda_pow = 0;
        std::vector<int> xi_pows;
        std::vector<int> eta_pows;
    };
    std::vector<Term> terms;

    static SymbolPolynomial one(const Dims& dims)
    {
        SymbolPolynomial p;
        p.terms.push_back({1.0, 0, std::vector<int>(dims.d(), 0), std::vector<int>(dims.n(), 0)});
        return p;
    }

    int max_xi_pow() const
    {
        int m = 0;
        for (const auto& t : terms)
            for (int e : t.xi_pows)
                m = std::max(m, e);
        return m;
    }
    int max_eta_pow() const
    {
        int m = 0;
        for (const auto& t : terms)
            for (int e : t.eta_pows)
                m = std::max(m, e);
        return m;
    }

    cplx evaluate(double lambda, std::span<const double> xi, std::span<const double> eta) const
    {
        cplx s = 0.0;
        for (const auto& t : terms) {
            cplx v = t.coeff * std::pow(lambda, t.lambda_pow);
            for (std::size_t k = 0; k < xi.size(); ++k)
                v *= std::pow(xi[k], t.xi_pows[k]);
            for (std::size_t k = 0; k < eta.size(); ++k)
                v *= std::pow(eta[k], t.eta_pows[k]);
            s += v;
        }
        return s;
    }
};

struct SpectralQuadOptions
{
    /// Absolute tolerance on the returned value.
    double abs_tol = 1e-13;
    /// Relative tolerance of the inner transversal integrals.
    double inner_rel_tol = 1e-13;
    std::size_t max_panels = 400000;
};

struct PointValue
{
    cplx value;
    double est_error = 0.0;
    std::size_t evaluations = 0;
};

namespace detail
{

/// Panel boundaries on [segments] such that the phase c1*k + c2*k^2 turns by
/// at most one period per panel.
inline std::vector<double> oscillation_panels(const std::vector<double>& segments, double c1, double c2)
{
    std::vector<double> out;
    out.push_back(segments.front());
    for (std::size_t i = 1; i < segments.size(); ++i) {
        const double a = segments[i - 1];
        const double b = segments[i];
        const double fmax = std::max(std::abs(c1 + 2.0 * c2 * a), std::abs(c1 + 2.0 * c2 * b));
        const std::size_t m = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil((b - a) * fmax / (2.0 * std::numbers::pi))));
        for (std::size_t j = 1; j < m; ++j)
            out.push_back(a + (b - a) * static_cast<double>(j) / static_cast<double>(m));
        out.push_back(b);
    }
    return out;
}

/// Moments int k^p f(k) exp(i (c1 k + c2 k^2)) dk for p = 0..pmax.
inline quad::Result<CVec> transversal_moments(const SpectralProfile::Factor& f, const std::vector<double>& segments,
                                             double c1, double c2, int pmax, const SpectralQuadOptions& opt)
{
    const auto panels = oscillation_panels(segments, c1, c2);
    auto integrand = [&](double k) {
        CVec v(static_cast<std::size_t>(pmax + 1));
        cplx base = f(k) * std::polar(1.0, k * (c1 + c2 * k));
        for (int p = 0; p <= pmax; ++p) {
            v[p] = base;
            base *= k;
        }
        return v;
    };
    quad::Options qo;
    qo.abs_tol = 1e-300;
    qo.rel_tol = opt.inner_rel_tol;
    qo.max_panels = opt.max_panels;
    return quad::integrate_or_throw<CVec>(integrand, panels, qo, "transversal moment integral");
}

} // namespace detail

/// (1/2)(2pi)^{-(N+1)} int exp(i(s lambda + x.xi - y.eta)) exp(-i t (|xi|^2 - |eta|^2)/lambda)
///     * poly(lambda, xi, eta) * vt0(lambda, xi, eta) dlambda dxi deta.
/// With t = 0 and poly = 1 this is v0(s, x, y). Separable profiles are
/// computed as an outer lambda quadrature over products of 1D transversal
/// moment integrals; other profiles by fully nested adaptive quadrature.
inline PointValue spectral_integral(const SpectralProfile& profile, double t, double s, std::span<const double> xbar,
                                    std::span<const double> ybar, const SymbolPolynomial& poly,
                                    const SpectralQuadOptions& opt = {})
{
    const Dims& dims = profile.dims();
    if (static_cast<int>(xbar.size()) != dims.d() || static_cast<int>(ybar.size()) != dims.n())
        throw DomainError("spectral_integral: point dimensions do not match the profile");
    const int N = dims.N();
    const double pref = 0.5 * std::pow(2.0 * std::numbers::pi, -(N + 1));
    const auto& sup = profile.support();
    const auto lseg = sup.lambda_segments();
    const auto tseg = sup.transverse_segments();
    const double R = sup.transverse_radius;

    // Bound on |d/dlambda| of the full phase, for the initial outer panels.
    const double qmax = static_cast<double>(N) * R * R;
    const double lam_freq = std::abs(s) + std::abs(t) * qmax / (sup.lambda_min * sup.lambda_min) + 1.0;
    std::vector<double> outer_breaks;
    if (sup.two_sided) {
        // two disjoint pieces; the gap carries no support
        std::vector<double> neg, pos;
        for (double b : lseg)
            (b < 0 ? neg : pos).push_back(b);
        outer_breaks = quad::subdivide(neg, 2.0 * std::numbers::pi / lam_freq);
        auto p2 = quad::subdivide(pos, 2.0 * std::numbers::pi / lam_freq);
        outer_breaks.insert(outer_breaks.end(), p2.begin(), p2.end());
    }
    else {
        outer_breaks = quad::subdivide(lseg, 2.0 * std::numbers::pi / lam_freq);
    }

    quad::Options oo;
    oo.abs_tol = opt.abs_tol / pref;
    oo.max_panels = opt.max_panels;

    PointValue out;
    std::size_t inner_evals = 0;
    double inner_err = 0.0;

    if (profile.separable()) {
        const auto& fac = profile.factors();
        const int px = poly.max_xi_pow();
        const int py = poly.max_eta_pow();
        auto outer = [&](double lambda) -> cplx {
            if (!sup.contains_lambda(lambda))
                return 0.0;
            const cplx L = fac.lambda(lambda);
            if (L == 0.0)
                return 0.0;
            const double alpha = t / lambda;
            std::vector<CVec> mx, my;
            mx.reserve(xbar.size());
            my.reserve(ybar.size());
            for (double xk : xbar) {
                auto r = detail::transversal_moments(fac.xi, tseg, xk, -alpha, px, opt);
                inner_evals += r.evaluations;
                inner_err = std::max(inner_err, r.est_error);
                mx.push_back(std::move(r.value));
            }
            for (double yk : ybar) {
                auto r = detail::transversal_moments(fac.eta, tseg, -yk, alpha, py, opt);
                inner_evals += r.evaluations;
                inner_err = std::max(inner_err, r.est_error);
                my.push_back(std::move(r.value));
            }
            cplx acc = 0.0;
            for (const auto& term : poly.terms) {
                cplx v = term.coeff * std::pow(lambda, term.lambda_pow);
                for (std::size_t k = 0; k < mx.size(); ++k)
                    v *= mx[k][term.xi_pows[k]];
                for (std::size_t k = 0; k < my.size(); ++k)
                    v *= my[k][term.eta_pows[k]];
                acc += v;
            }
            return L * std::polar(1.0, s * lambda) * acc;
        };
        auto r = quad::integrate_or_throw<cplx>(outer, outer_breaks, oo, "spectral_integral (lambda)");
        out.value = pref * r.value;
        out.est_error = pref * r.est_error;
        out.evaluations = r.evaluations + inner_evals;
        return out;
    }

    // Generic nested quadrature: lambda outermost, then xi_1..xi_d, eta_1..eta_n.
    const int nv = N;
    std::vector<double> xi(dims.d()), eta(dims.n());
    quad::Options io;
    io.abs_tol = 1e-300;
    io.rel_tol = opt.inner_rel_tol;
    io.max_panels = opt.max_panels;
    double lambda_cur = 0.0;

    std::function<cplx(int)> nest = [&](int level) -> cplx {
        if (level == nv) {
            const cplx v = profile(lambda_cur, xi, eta);
            if (v == 0.0)
                return 0.0;
            double q = norm2(xi) - norm2(eta);
            double ph = s * lambda_cur + dot(xbar, xi) - dot(ybar, eta) - t * q / lambda_cur;
            return v * poly.evaluate(lambda_cur, xi, eta) * std::polar(1.0, ph);
        }
        const bool is_xi = level < dims.d();
        double& var = is_xi ? xi[level] : eta[level - dims.d()];
        const double lin = is_xi ? xbar[level] : -ybar[level - dims.d()];
        const double quadc = is_xi ? -t / lambda_cur : t / lambda_cur;
        const auto panels = detail::oscillation_panels(tseg, lin, quadc);
        auto f = [&](double k) {
            var = k;
            return nest(level + 1);
        };
        auto r = quad::integrate_or_throw<cplx>(f, panels, io, "spectral_integral (transversal)");
        inner_evals += r.evaluations;
        var = 0.0;
        return r.value;
    };
    auto outer = [&](double lambda) -> cplx {
        if (!sup.contains_lambda(lambda))
            return 0.0;
        lambda_cur = lambda;
        return nest(0);
    };
    auto r = quad::integrate_or_throw<cplx>(outer, outer_breaks, oo, "spectral_integral (lambda)");
    out.value = pref * r.value;
    out.est_error = pref * r.est_error;
    out.evaluations = r.evaluations + inner_evals;
    return out;
}

/// v0 at (s, x-bar, y-bar).
inline PointValue evaluate_v0(const SpectralProfile& profile, double s, std::span<const double> xbar,
                              std::span<const double> ybar, const SpectralQuadOptions& opt = {})
{
    return spectral_integral(profile, 0.0, s, xbar, ybar, SymbolPolynomial::one(profile.dims()), opt);
}

/// ||v0||_{L2} via Plancherel: ||v0||^2 = (1/4)(2pi)^{-(N+1)} int |vt0|^2.
inline double v0_l2_norm(const SpectralProfile& profile, double rel_tol = 1e-13)
{
    const Dims& dims = profile.dims();
    const int N = dims.N();
    const auto& sup = profile.support();
    const auto lseg = sup.lambda_segments();
    const auto tseg = sup.transverse_segments();
    quad::Options qo;
    qo.abs_tol = 1e-300;
    qo.rel_tol = rel_tol;

    double integral = 0.0;
    if (profile.separable()) {
        const auto& f = profile.factors();
        auto lam = quad::integrate_or_throw<cplx>([&](double l) -> cplx { return sup.contains_lambda(l) ? std::norm(f.lambda(l)) : 0.0; },
                                                  lseg, qo, "v0_l2_norm");
        auto gx = quad::integrate_or_throw<cplx>([&](double k) -> cplx { return std::norm(f.xi(k)); }, tseg, qo, "v0_l2_norm");
        auto gy = quad::integrate_or_throw<cplx>([&](double k) -> cplx { return std::norm(f.eta(k)); }, tseg, qo, "v0_l2_norm");
        integral = lam.value.real() * std::pow(gx.value.real(), dims.d()) * std::pow(gy.value.real(), dims.n());
    }
    else {
        std::vector<double> xi(dims.d()), eta(dims.n());
        double lambda_cur = 0.0;
        std::function<cplx(int)> nest = [&](int level) -> cplx {
            if (level == N)
                return std::norm(profile(lambda_cur, xi, eta));
            double& var = level < dims.d() ? xi[level] : eta[level - dims.d()];
            auto r = quad::integrate_or_throw<cplx>(
                [&](double k) {
                    var = k;
                    return nest(level + 1);
                },
                tseg, qo, "v0_l2_norm");
            var = 0.0;
            return r.value;
        };
        auto r = quad::integrate_or_throw<cplx>(
            [&](double l) -> cplx {
                if (!sup.contains_lambda(l))
                    return 0.0;
                lambda_cur = l;
                return nest(0);
            },
            lseg, qo, "v0_l2_norm");
        integral = r.value.real();
    }
    return std::sqrt(0.25 * std::pow(2.0 * std::numbers::pi, -(N + 1)) * integral);
}

} // namespace charwave
