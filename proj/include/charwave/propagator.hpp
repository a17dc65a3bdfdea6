#pragma once

// Exact spectral evolution in t. Pointwise values of u and its derivatives by
// oscillatory quadrature, and a periodic-grid realisation (FFTW) used for the
// conservation and PDE-residual checks.

#include <cmath>
#include <complex>
#include <map>
#include <mutex>
#include <numbers>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include <fftw3.h>

#include "charwave/errors.hpp"
#include "charwave/geometry.hpp"
#include "charwave/quadrature.hpp"
#include "charwave/spectral_data.hpp"

namespace charwave
{

/// Deliberate corruptions of the multiplier used to test that the checks
/// can tell a wrong evolution from a right one.
enum class MultiplierFault
{
    None,
    DoublePhase, // phase multiplied by 2
    FlipEtaSign  // |xi|^2 + |eta|^2 instead of |xi|^2 - |eta|^2
};

/// exp(-i t (|xi-bar|^2 - |eta-bar|^2) / lambda).
class EvolutionMultiplier
{
public:
    explicit EvolutionMultiplier(double t, MultiplierFault fault = MultiplierFault::None) : t_(t), fault_(fault) {}

    double t() const noexcept { return t_; }

    cplx operator()(double lambda, std::span<const double> xi, std::span<const double> eta) const
    {
        if (lambda == 0.0)
            throw DomainError("EvolutionMultiplier: undefined at lambda = 0");
        double q = norm2(xi) - norm2(eta);
        if (fault_ == MultiplierFault::FlipEtaSign)
            q = norm2(xi) + norm2(eta);
        double phase = -t_ * q / lambda;
        if (fault_ == MultiplierFault::DoublePhase)
            phase *= 2.0;
        return std::polar(1.0, phase);
    }

private:
    double t_;
    MultiplierFault fault_;
};

inline EvolutionMultiplier evolution_multiplier(double t) { return EvolutionMultiplier(t); }

/// The Fourier symbol of d^beta in the graph chart, expanded in monomials of
/// lambda^{+-1}, xi-bar_k and eta-bar_k using
///   xi0 = (lambda + q/lambda)/2, eta0 = (lambda - q/lambda)/2, q = |eta|^2 - |xi|^2.
inline SymbolPolynomial derivative_polynomial(const MultiIndex& beta)
{
    const Dims& dims = beta.dims();
    const int d = dims.d();
    const int n = dims.n();
    using Key = std::tuple<int, std::vector<int>, std::vector<int>>;
    std::map<Key, cplx> poly;
    poly[{0, std::vector<int>(d, 0), std::vector<int>(n, 0)}] = 1.0;

    auto multiply = [&](const std::map<Key, cplx>& factor) {
        std::map<Key, cplx> out;
        for (const auto& [ka, ca] : poly)
            for (const auto& [kb, cb] : factor) {
                Key k{std::get<0>(ka) + std::get<0>(kb), std::get<1>(ka), std::get<2>(ka)};
                for (int i = 0; i < d; ++i)
                    std::get<1>(k)[i] += std::get<1>(kb)[i];
                for (int i = 0; i < n; ++i)
                    std::get<2>(k)[i] += std::get<2>(kb)[i];
                out[k] += ca * cb;
            }
        poly = std::move(out);
    };

    const cplx I(0.0, 1.0);
    // lambda-component factor: c_l * lambda + c_q * q / lambda
    auto zero_component = [&](cplx c_l, cplx c_q) {
        std::map<Key, cplx> f;
        f[{1, std::vector<int>(d, 0), std::vector<int>(n, 0)}] += c_l;
        for (int k = 0; k < n; ++k) {
            std::vector<int> e(n, 0);
            e[k] = 2;
            f[{-1, std::vector<int>(d, 0), e}] += c_q;
        }
        for (int k = 0; k < d; ++k) {
            std::vector<int> e(d, 0);
            e[k] = 2;
            f[{-1, e, std::vector<int>(n, 0)}] += -c_q;
        }
        return f;
    };
    for (int e = 0; e < beta.x_power(0); ++e)
        multiply(zero_component(0.5 * I, 0.5 * I));
    for (int e = 0; e < beta.y_power(0); ++e)
        multiply(zero_component(-0.5 * I, 0.5 * I));
    for (int k = 1; k <= d; ++k)
        for (int e = 0; e < beta.x_power(k); ++e) {
            std::vector<int> ex(d, 0);
            ex[k - 1] = 1;
            multiply({{{0, ex, std::vector<int>(n, 0)}, I}});
        }
    for (int k = 1; k <= n; ++k)
        for (int e = 0; e < beta.y_power(k); ++e) {
            std::vector<int> ey(n, 0);
            ey[k - 1] = 1;
            multiply({{{0, std::vector<int>(d, 0), ey}, -I}});
        }

    SymbolPolynomial out;
    for (const auto& [k, c] : poly)
        if (c != 0.0)
            out.terms.push_back({c, std::get<0>(k), std::get<1>(k), std::get<2>(k)});
    return out;
}

struct PointOptions
{
    SpectralQuadOptions quad;
    int max_order = 4;
};

/// d^beta u(x, y), evaluated in the graph chart of the cone representation,
/// i.e. the evolved field at (t, s) = ((x0 + y0)/2, (x0 - y0)/2).
inline PointValue evaluate_dbeta_u_point(const SpectralProfile& profile, const LightConePoint& pt, const MultiIndex& beta,
                                         const PointOptions& opt = {})
{
    check_dims(pt, profile.dims());
    if (!(beta.dims() == profile.dims()))
        throw DomainError("evaluate_dbeta_u_point: multi-index dimension mismatch");
    if (beta.order() > opt.max_order)
        throw DomainError("evaluate_dbeta_u_point: |beta| = " + std::to_string(beta.order()) + " exceeds the configured maximum " +
                          std::to_string(opt.max_order));
    const std::span<const double> xbar(pt.x.data() + 1, pt.x.size() - 1);
    const std::span<const double> ybar(pt.y.data() + 1, pt.y.size() - 1);
    return spectral_integral(profile, pt.lab_t(), pt.lab_s(), xbar, ybar, derivative_polynomial(beta), opt.quad);
}

inline PointValue evaluate_u_point(const SpectralProfile& profile, const LightConePoint& pt, const PointOptions& opt = {})
{
    return evaluate_dbeta_u_point(profile, pt, MultiIndex::zero(profile.dims()), opt);
}

/// Uniform periodic grid centred at the origin, axes ordered
/// (s, x-bar_1..d, y-bar_1..n). The s axis may use its own node count and
/// length (0 means "same as the transversal axes").
struct GridConfig
{
    std::size_t nodes = 64;
    double box = 64.0;
    std::size_t s_nodes = 0;
    double s_box = 0.0;

    std::size_t axis_nodes(std::size_t axis) const { return axis == 0 && s_nodes > 0 ? s_nodes : nodes; }
    double axis_box(std::size_t axis) const { return axis == 0 && s_box > 0.0 ? s_box : box; }
    double spacing(std::size_t axis) const { return axis_box(axis) / static_cast<double>(axis_nodes(axis)); }
    /// Largest resolvable angular frequency on an axis.
    double nyquist(std::size_t axis) const { return std::numbers::pi / spacing(axis); }
    double node(std::size_t axis, std::size_t j) const { return -0.5 * axis_box(axis) + spacing(axis) * static_cast<double>(j); }
    /// Angular frequency of DFT index m.
    double frequency(std::size_t axis, std::size_t m) const
    {
        const auto K = static_cast<long>(axis_nodes(axis));
        long mm = static_cast<long>(m);
        if (mm >= K / 2)
            mm -= K;
        return 2.0 * std::numbers::pi * static_cast<double>(mm) / axis_box(axis);
    }

    std::vector<std::size_t> shape(std::size_t rank) const
    {
        std::vector<std::size_t> sh(rank);
        for (std::size_t a = 0; a < rank; ++a)
            sh[a] = axis_nodes(a);
        return sh;
    }
    double cell_volume(std::size_t rank) const
    {
        double v = 1.0;
        for (std::size_t a = 0; a < rank; ++a)
            v *= spacing(a);
        return v;
    }
};

struct GridField
{
    int d = 1;
    int n = 1;
    GridConfig grid;
    double t = 0.0;
    std::vector<cplx> values; // row-major over (s, x-bar, y-bar)
    double l2_norm = 0.0;

    std::size_t rank() const { return static_cast<std::size_t>(d + n + 1); }
    std::size_t size() const { return values.size(); }

    /// Multi-index of flat position i.
    std::vector<std::size_t> index(std::size_t i) const
    {
        std::vector<std::size_t> idx(rank());
        for (std::size_t a = rank(); a-- > 0;) {
            idx[a] = i % grid.axis_nodes(a);
            i /= grid.axis_nodes(a);
        }
        return idx;
    }

    std::size_t flat(std::span<const std::size_t> idx) const
    {
        std::size_t i = 0;
        for (std::size_t a = 0; a < rank(); ++a)
            i = i * grid.axis_nodes(a) + idx[a];
        return i;
    }

    /// Physical coordinates (s, x-bar, y-bar) of flat position i.
    std::vector<double> coordinates(std::size_t i) const
    {
        const auto idx = index(i);
        std::vector<double> z(rank());
        for (std::size_t a = 0; a < rank(); ++a)
            z[a] = grid.node(a, idx[a]);
        return z;
    }
};

namespace detail
{

inline std::mutex& fftw_planner_mutex()
{
    static std::mutex m;
    return m;
}

/// In-place c2c transform; sign = FFTW_FORWARD or FFTW_BACKWARD.
inline void fft_inplace(std::vector<cplx>& a, const std::vector<std::size_t>& shape, int sign)
{
    std::vector<int> dims(shape.begin(), shape.end());
    auto* data = reinterpret_cast<fftw_complex*>(a.data());
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        plan = fftw_plan_dft(static_cast<int>(dims.size()), dims.data(), data, data, sign, FFTW_ESTIMATE);
    }
    if (plan == nullptr)
        throw Error("FFTW plan creation failed");
    fftw_execute(plan);
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
}

inline double sum_squares(const std::vector<cplx>& v)
{
    std::vector<double> sq(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        sq[i] = std::norm(v[i]);
    return quad::pairwise_sum<double>(sq);
}

inline void unflatten(std::size_t i, const std::vector<std::size_t>& shape, std::vector<std::size_t>& idx)
{
    for (std::size_t a = shape.size(); a-- > 0;) {
        idx[a] = i % shape[a];
        i /= shape[a];
    }
}

inline void check_nyquist(const SpectralProfile& profile, const GridConfig& grid)
{
    const auto& sup = profile.support();
    const std::size_t rank = static_cast<std::size_t>(profile.dims().N() + 1);
    // the most negative DFT frequency is -nyquist, so the bounds are strict
    if (!(sup.lambda_max < grid.nyquist(0)))
        throw DomainError("Nyquist violation: lambda support " + std::to_string(sup.lambda_max) +
                          " is not below the s-axis Nyquist frequency " + std::to_string(grid.nyquist(0)));
    for (std::size_t a = 1; a < rank; ++a)
        if (!(sup.transverse_radius < grid.nyquist(a)))
            throw DomainError("Nyquist violation: transversal support " + std::to_string(sup.transverse_radius) +
                              " is not below the Nyquist frequency " + std::to_string(grid.nyquist(a)));
}

/// Mode array V_m = vt0(k_s, k_x, -k_y) * multiplier * exp(i k . origin).
inline std::vector<cplx> sample_modes(const SpectralProfile& profile, const GridConfig& grid, const EvolutionMultiplier& mult)
{
    const Dims& dims = profile.dims();
    const std::size_t rank = static_cast<std::size_t>(dims.N() + 1);
    check_nyquist(profile, grid);
    const auto shape = grid.shape(rank);
    std::size_t total = 1;
    for (auto k : shape)
        total *= k;
    std::vector<cplx> modes(total);
    std::vector<double> xi(dims.d()), eta(dims.n());
    std::vector<std::size_t> idx(rank, 0);
    for (std::size_t i = 0; i < total; ++i) {
        unflatten(i, shape, idx);
        const double lambda = grid.frequency(0, idx[0]);
        double phase = -0.5 * grid.axis_box(0) * lambda;
        for (int k = 0; k < dims.d(); ++k) {
            const std::size_t a = 1 + k;
            xi[k] = grid.frequency(a, idx[a]);
            phase -= 0.5 * grid.axis_box(a) * xi[k];
        }
        for (int k = 0; k < dims.n(); ++k) {
            const std::size_t a = 1 + dims.d() + k;
            const double ky = grid.frequency(a, idx[a]);
            eta[k] = -ky;
            phase -= 0.5 * grid.axis_box(a) * ky;
        }
        if (!profile.in_support(lambda, xi, eta))
            continue;
        const cplx v = profile(lambda, xi, eta);
        if (v == 0.0)
            continue;
        modes[i] = v * mult(lambda, xi, eta) * std::polar(1.0, phase);
    }
    return modes;
}

} // namespace detail

/// The evolved field on the grid: sample vt0 on the dual grid, apply the
/// multiplier, inverse DFT. By Poisson summation the nodes carry the
/// periodisation of v(t) over the box.
inline GridField evolve_grid(const SpectralProfile& profile, const GridConfig& grid, double t,
                             MultiplierFault fault = MultiplierFault::None)
{
    const Dims& dims = profile.dims();
    const std::size_t rank = static_cast<std::size_t>(dims.N() + 1);
    for (std::size_t a = 0; a < rank; ++a)
        if (grid.axis_nodes(a) < 2 || !(grid.axis_box(a) > 0.0))
            throw DomainError("evolve_grid: every axis needs at least two nodes and a positive length");
    auto modes = detail::sample_modes(profile, grid, EvolutionMultiplier(t, fault));
    detail::fft_inplace(modes, grid.shape(rank), FFTW_BACKWARD);
    // (1/2)(2pi)^{-(N+1)} times the dual cell volume prod(2pi/L_a)
    double pref = 0.5;
    for (std::size_t a = 0; a < rank; ++a)
        pref /= grid.axis_box(a);
    for (auto& v : modes)
        v *= pref;

    GridField f;
    f.d = dims.d();
    f.n = dims.n();
    f.grid = grid;
    f.t = t;
    f.values = std::move(modes);
    f.l2_norm = std::sqrt(detail::sum_squares(f.values) * grid.cell_volume(rank));
    return f;
}

/// max over t of | ||v(t)|| - ||v0|| | / ||v0|| on the grid (absolute
/// deviation when v0 = 0).
inline double conservation_check(const SpectralProfile& profile, const GridConfig& grid, std::span<const double> ts,
                                 MultiplierFault fault = MultiplierFault::None)
{
    const double n0 = evolve_grid(profile, grid, 0.0).l2_norm;
    double worst = 0.0;
    for (double t : ts) {
        const double nt = evolve_grid(profile, grid, t, fault).l2_norm;
        worst = std::max(worst, n0 == 0.0 ? nt : std::abs(nt - n0) / n0);
    }
    return worst;
}

/// Discrete L2 norm of (d_t d_s + Lap_x - Lap_y) v at time t. The t-derivative
/// is the centred difference of the grid fields at t +- h; s and transversal
/// derivatives are spectral (exact on the band-limited grid), so the residual
/// of the correct evolution is O(h^2).
inline double pde_residual(const SpectralProfile& profile, const GridConfig& grid, double t, double h,
                           MultiplierFault fault = MultiplierFault::None)
{
    if (!(h > 0.0))
        throw DomainError("pde_residual: step must be positive");
    const Dims& dims = profile.dims();
    const std::size_t rank = static_cast<std::size_t>(dims.N() + 1);
    const auto shape = grid.shape(rank);
    auto vm = evolve_grid(profile, grid, t - h, fault).values;
    auto v0 = evolve_grid(profile, grid, t, fault).values;
    auto vp = evolve_grid(profile, grid, t + h, fault).values;
    detail::fft_inplace(vm, shape, FFTW_FORWARD);
    detail::fft_inplace(v0, shape, FFTW_FORWARD);
    detail::fft_inplace(vp, shape, FFTW_FORWARD);

    const cplx I(0.0, 1.0);
    std::vector<cplx> res(v0.size());
    std::vector<std::size_t> idx(rank);
    for (std::size_t i = 0; i < v0.size(); ++i) {
        detail::unflatten(i, shape, idx);
        const double ks = grid.frequency(0, idx[0]);
        double lap = 0.0;
        for (int k = 0; k < dims.d(); ++k)
            lap -= std::pow(grid.frequency(1 + k, idx[1 + k]), 2);
        for (int k = 0; k < dims.n(); ++k)
            lap += std::pow(grid.frequency(1 + dims.d() + k, idx[1 + dims.d() + k]), 2);
        res[i] = I * ks * (vp[i] - vm[i]) / (2.0 * h) + lap * v0[i];
    }
    // Parseval: sum |r_j|^2 = sum |R_m|^2 / #nodes
    const double total = static_cast<double>(v0.size());
    return std::sqrt(detail::sum_squares(res) / total * grid.cell_volume(rank));
}

} // namespace charwave
