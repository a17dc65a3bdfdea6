#pragma once

// One-dimensional quadrature building blocks: a global adaptive
// Gauss-Kronrod (10/21) panel integrator for complex and vector-valued
// integrands, Gauss-Legendre node tables and deterministic summation.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <queue>
#include <span>
#include <stdexcept>
#include <type_traits>
#include <valarray>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "charwave/errors.hpp"

namespace charwave
{

using cplx = std::complex<double>;
using CVec = std::valarray<cplx>;

namespace quad
{

inline double magnitude(const cplx& z) { return std::abs(z); }
inline double magnitude(double x) { return std::abs(x); }
inline double magnitude(const CVec& v)
{
    double m = 0.0;
    for (const auto& z : v)
        m = std::max(m, std::abs(z));
    return m;
}

template <class T>
T scaled(const T& v, double w)
{
    if constexpr (std::is_same_v<T, CVec>)
        return v * cplx(w, 0.0);
    else
        return v * w;
}

template <class T>
T zero_like(const T& proto)
{
    if constexpr (std::is_same_v<T, CVec>)
        return CVec(cplx{}, proto.size());
    else
        return T{};
}

/// Pairwise (cascade) summation. The reduction tree depends only on the
/// number of terms, so results are bit-stable for a fixed input order.
template <class T>
T pairwise_sum(std::span<const T> xs)
{
    if (xs.empty())
        return T{};
    if (xs.size() == 1)
        return xs[0];
    if (xs.size() <= 8) {
        T s = xs[0];
        for (std::size_t i = 1; i < xs.size(); ++i)
            s = s + xs[i];
        return s;
    }
    const std::size_t half = xs.size() / 2;
    return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

struct Options
{
    double abs_tol = 1e-12;
    double rel_tol = 0.0;
    std::size_t max_panels = 200000;
};

template <class T>
struct Result
{
    T value{};
    double est_error = 0.0;
    std::size_t evaluations = 0;
    std::size_t panels = 0;
    bool converged = true;
};

namespace detail
{

struct GK21
{
    std::array<double, 11> x{};
    std::array<double, 11> wk{};
    std::array<double, 11> wg{}; // zero on Kronrod-only nodes

    GK21()
    {
        const auto& a = boost::math::quadrature::gauss_kronrod<double, 21>::abscissa();
        const auto& w = boost::math::quadrature::gauss_kronrod<double, 21>::weights();
        const auto& gw = boost::math::quadrature::gauss<double, 10>::weights();
        for (std::size_t i = 0; i < 11; ++i) {
            x[i] = a[i];
            wk[i] = w[i];
        }
        // Gauss-10 abscissae are the odd Kronrod nodes.
        for (std::size_t i = 0; i < 5; ++i)
            wg[2 * i + 1] = gw[i];
    }
};

inline const GK21& gk21()
{
    static const GK21 rule;
    return rule;
}

template <class T>
struct Panel
{
    double a = 0.0;
    double b = 0.0;
    T value{};
    double err = 0.0;
    double floor = 0.0; // rounding floor of the estimate
};

template <class T, class F>
Panel<T> gk21_panel(F& f, double a, double b)
{
    const auto& r = gk21();
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);

    std::array<T, 21> fv;
    fv[0] = f(c);
    for (std::size_t i = 1; i < 11; ++i) {
        fv[2 * i - 1] = f(c - h * r.x[i]);
        fv[2 * i] = f(c + h * r.x[i]);
    }

    T k = scaled(fv[0], r.wk[0]);
    T g = zero_like(fv[0]);
    double resabs = r.wk[0] * magnitude(fv[0]);
    for (std::size_t i = 1; i < 11; ++i) {
        const T pair = fv[2 * i - 1] + fv[2 * i];
        k = k + scaled(pair, r.wk[i]);
        if (r.wg[i] != 0.0)
            g = g + scaled(pair, r.wg[i]);
        resabs += r.wk[i] * (magnitude(fv[2 * i - 1]) + magnitude(fv[2 * i]));
    }
    const T mean = scaled(k, 0.5);
    double resasc = r.wk[0] * magnitude(fv[0] - mean);
    for (std::size_t i = 1; i < 11; ++i)
        resasc += r.wk[i] * (magnitude(fv[2 * i - 1] - mean) + magnitude(fv[2 * i] - mean));

    Panel<T> p;
    p.a = a;
    p.b = b;
    p.value = scaled(k, h);
    resabs *= std::abs(h);
    resasc *= std::abs(h);
    double err = magnitude(scaled(T(k - g), h));
    if (resasc != 0.0 && err != 0.0)
        err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
    p.floor = 50.0 * std::numeric_limits<double>::epsilon() * resabs;
    p.err = std::max(err, p.floor);
    return p;
}

} // namespace detail

/// Split every interval between consecutive breakpoints into equal pieces of
/// width at most max_width. Breakpoints must be sorted.
inline std::vector<double> subdivide(std::span<const double> breaks, double max_width)
{
    std::vector<double> out;
    if (breaks.size() < 2)
        return {breaks.begin(), breaks.end()};
    out.push_back(breaks[0]);
    for (std::size_t i = 1; i < breaks.size(); ++i) {
        const double a = breaks[i - 1];
        const double b = breaks[i];
        std::size_t m = 1;
        if (max_width > 0.0 && std::isfinite(max_width))
            m = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil((b - a) / max_width)));
        for (std::size_t j = 1; j < m; ++j)
            out.push_back(a + (b - a) * static_cast<double>(j) / static_cast<double>(m));
        out.push_back(b);
    }
    return out;
}

/// Sort, clip to [lo, hi] and deduplicate a list of candidate breakpoints.
inline std::vector<double> clean_breakpoints(std::vector<double> pts, double lo, double hi)
{
    pts.push_back(lo);
    pts.push_back(hi);
    std::vector<double> out;
    for (double p : pts)
        if (p >= lo && p <= hi && std::isfinite(p))
            out.push_back(p);
    std::sort(out.begin(), out.end());
    const double eps = 1e-14 * std::max(1.0, hi - lo);
    std::vector<double> uniq;
    for (double p : out)
        if (uniq.empty() || p - uniq.back() > eps)
            uniq.push_back(p);
    if (uniq.size() >= 2)
        uniq.back() = hi;
    return uniq;
}

/// Global adaptive Gauss-Kronrod integration over the panels defined by
/// sorted breakpoints. The panel with the largest error estimate is bisected
/// until the total estimate is below max(abs_tol, rel_tol*|I|) or the
/// rounding floor. Non-convergence is reported through Result::converged.
template <class T, class F>
Result<T> integrate(F&& f, std::span<const double> breaks, const Options& opt = {})
{
    using detail::Panel;
    Result<T> res;
    if (breaks.size() < 2)
        return res;

    std::vector<Panel<T>> panels;
    panels.reserve(breaks.size() * 4);
    for (std::size_t i = 1; i < breaks.size(); ++i)
        if (breaks[i] > breaks[i - 1])
            panels.push_back(detail::gk21_panel<T>(f, breaks[i - 1], breaks[i]));
    res.evaluations = 21 * panels.size();
    if (panels.empty())
        return res;

    auto cmp = [&](std::size_t i, std::size_t j) {
        if (panels[i].err != panels[j].err)
            return panels[i].err < panels[j].err;
        return i > j;
    };
    std::priority_queue<std::size_t, std::vector<std::size_t>, decltype(cmp)> heap(cmp);

    T total = zero_like(panels[0].value);
    double total_err = 0.0;
    double total_floor = 0.0;
    for (std::size_t i = 0; i < panels.size(); ++i) {
        total = total + panels[i].value;
        total_err += panels[i].err;
        total_floor += panels[i].floor;
        heap.push(i);
    }

    auto target = [&] {
        return std::max({opt.abs_tol, opt.rel_tol * magnitude(total), 2.0 * total_floor});
    };

    while (total_err > target()) {
        if (panels.size() >= opt.max_panels) {
            res.converged = false;
            break;
        }
        const std::size_t i = heap.top();
        heap.pop();
        Panel<T> old = panels[i];
        if (old.err <= old.floor * 1.0000001)
            break; // everything left is at the rounding floor
        const double mid = 0.5 * (old.a + old.b);
        if (!(mid > old.a && mid < old.b)) {
            res.converged = false;
            break;
        }
        panels[i] = detail::gk21_panel<T>(f, old.a, mid);
        panels.push_back(detail::gk21_panel<T>(f, mid, old.b));
        res.evaluations += 42;
        const Panel<T>& l = panels[i];
        const Panel<T>& r = panels.back();
        total = total + (l.value + r.value - old.value);
        total_err += l.err + r.err - old.err;
        total_floor += l.floor + r.floor - old.floor;
        heap.push(i);
        heap.push(panels.size() - 1);
    }

    std::sort(panels.begin(), panels.end(), [](const Panel<T>& p, const Panel<T>& q) { return p.a < q.a; });
    std::vector<T> vals;
    vals.reserve(panels.size());
    double err = 0.0;
    for (const auto& p : panels) {
        vals.push_back(p.value);
        err += p.err;
    }
    res.value = pairwise_sum<T>(vals);
    res.est_error = err;
    res.panels = panels.size();
    return res;
}

template <class T, class F>
Result<T> integrate(F&& f, double a, double b, const Options& opt = {})
{
    const double br[2] = {a, b};
    return integrate<T>(std::forward<F>(f), std::span<const double>(br, 2), opt);
}

/// Same as integrate() but throws ToleranceError when the budget is exhausted.
template <class T, class F>
Result<T> integrate_or_throw(F&& f, std::span<const double> breaks, const Options& opt, const char* what)
{
    auto r = integrate<T>(std::forward<F>(f), breaks, opt);
    if (!r.converged)
        throw ToleranceError(std::string(what) + ": quadrature node budget exhausted", r.est_error);
    return r;
}

struct GaussLegendre
{
    std::vector<double> nodes;   // on (-1, 1), ascending
    std::vector<double> weights;
};

/// n-point Gauss-Legendre rule by Newton iteration on P_n.
inline GaussLegendre gauss_legendre(std::size_t n)
{
    if (n == 0)
        throw DomainError("gauss_legendre: n must be positive");
    GaussLegendre gl;
    gl.nodes.assign(n, 0.0);
    gl.weights.assign(n, 0.0);
    const std::size_t m = (n + 1) / 2;
    for (std::size_t i = 0; i < m; ++i) {
        double z = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p1 = 1.0, p2 = 0.0;
            for (std::size_t j = 1; j <= n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / static_cast<double>(j);
            }
            pp = static_cast<double>(n) * (z * p1 - p2) / (z * z - 1.0);
            const double dz = p1 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-16)
                break;
        }
        // recompute derivative at the converged root
        double p1 = 1.0, p2 = 0.0;
        for (std::size_t j = 1; j <= n; ++j) {
            const double p3 = p2;
            p2 = p1;
            p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / static_cast<double>(j);
        }
        pp = static_cast<double>(n) * (z * p1 - p2) / (z * z - 1.0);
        const double w = 2.0 / ((1.0 - z * z) * pp * pp);
        gl.nodes[i] = -z;
        gl.nodes[n - 1 - i] = z;
        gl.weights[i] = w;
        gl.weights[n - 1 - i] = w;
    }
    return gl;
}

} // namespace quad
} // namespace charwave
