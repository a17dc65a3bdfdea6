#pragma once

// Coordinates, the characteristic cone and its strata, characteristic lines,
// multi-index symbols and the restricted phase function.

#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "charwave/errors.hpp"

namespace charwave
{

using cplx = std::complex<double>;
using Vec = std::vector<double>;

inline double dot(std::span<const double> a, std::span<const double> b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += a[i] * b[i];
    return s;
}

inline double norm2(std::span<const double> a) { return dot(a, a); }
inline double norm(std::span<const double> a) { return std::sqrt(norm2(a)); }

/// Transversal dimensions d (x-bar) and n (y-bar); N = d + n.
class Dims
{
public:
    Dims(int d, int n) : d_(d), n_(n)
    {
        if (d < 1 || n < 1)
            throw DomainError("Dims: d and n must be >= 1 (got d=" + std::to_string(d) + ", n=" +
                              std::to_string(n) + ")");
    }

    int d() const noexcept { return d_; }
    int n() const noexcept { return n_; }
    int N() const noexcept { return d_ + n_; }

    bool operator==(const Dims&) const = default;

private:
    int d_;
    int n_;
};

/// A point (t, s, x-bar, y-bar) in the original variables.
struct LabPoint
{
    double t = 0.0;
    double s = 0.0;
    Vec xbar;
    Vec ybar;
};

/// A point (x, y) with x = (x0, x-bar), y = (y0, y-bar).
struct LightConePoint
{
    Vec x;
    Vec y;

    Dims dims() const { return Dims(static_cast<int>(x.size()) - 1, static_cast<int>(y.size()) - 1); }
    double lab_t() const { return 0.5 * (x[0] + y[0]); }
    double lab_s() const { return 0.5 * (x[0] - y[0]); }
};

inline void check_dims(const LabPoint& p, const Dims& dims)
{
    if (static_cast<int>(p.xbar.size()) != dims.d() || static_cast<int>(p.ybar.size()) != dims.n())
        throw DomainError("LabPoint: vector lengths do not match Dims");
}

inline void check_dims(const LightConePoint& p, const Dims& dims)
{
    if (static_cast<int>(p.x.size()) != dims.d() + 1 || static_cast<int>(p.y.size()) != dims.n() + 1)
        throw DomainError("LightConePoint: vector lengths do not match Dims");
}

inline LightConePoint lab_to_lightcone(const LabPoint& p)
{
    if (p.xbar.empty() || p.ybar.empty())
        throw DomainError("lab_to_lightcone: x-bar and y-bar must be non-empty");
    LightConePoint q;
    q.x.reserve(p.xbar.size() + 1);
    q.y.reserve(p.ybar.size() + 1);
    q.x.push_back(p.t + p.s);
    q.y.push_back(p.t - p.s);
    q.x.insert(q.x.end(), p.xbar.begin(), p.xbar.end());
    q.y.insert(q.y.end(), p.ybar.begin(), p.ybar.end());
    return q;
}

inline LabPoint lightcone_to_lab(const LightConePoint& q)
{
    if (q.x.size() < 2 || q.y.size() < 2)
        throw DomainError("lightcone_to_lab: x and y need at least two components");
    LabPoint p;
    p.t = 0.5 * (q.x[0] + q.y[0]);
    p.s = 0.5 * (q.x[0] - q.y[0]);
    p.xbar.assign(q.x.begin() + 1, q.x.end());
    p.ybar.assign(q.y.begin() + 1, q.y.end());
    return p;
}

/// Unit vectors on S^1 and S^2 from their angle charts.
/// S^1: (cos a, sin a). S^2: polar angle measured from the 0-th axis,
/// (cos p, sin p cos az, sin p sin az).
inline Vec unit_from_angles(int sphere_dim, std::span<const double> angles)
{
    if (sphere_dim == 1 && angles.size() == 1)
        return {std::cos(angles[0]), std::sin(angles[0])};
    if (sphere_dim == 2 && angles.size() == 2)
        return {std::cos(angles[0]), std::sin(angles[0]) * std::cos(angles[1]),
                std::sin(angles[0]) * std::sin(angles[1])};
    throw DomainError("unit_from_angles: only S^1 (one angle) and S^2 (polar, azimuth) are supported");
}

/// Unit directions (theta, omega) on S^d x S^n with theta0 + omega0 != 0.
class DirectionPair
{
public:
    DirectionPair(Vec theta, Vec omega) : theta_(std::move(theta)), omega_(std::move(omega))
    {
        if (theta_.size() < 2 || omega_.size() < 2)
            throw DomainError("DirectionPair: theta and omega need at least two components");
        if (std::abs(norm(theta_) - 1.0) > 1e-12 || std::abs(norm(omega_) - 1.0) > 1e-12)
            throw DomainError("DirectionPair: theta and omega must be unit vectors");
        if (std::abs(theta_[0] + omega_[0]) <= 1e-12)
            throw DomainError("DirectionPair: transversality violated, theta0 + omega0 = 0");
    }

    const Vec& theta() const noexcept { return theta_; }
    const Vec& omega() const noexcept { return omega_; }
    Dims dims() const { return Dims(static_cast<int>(theta_.size()) - 1, static_cast<int>(omega_.size()) - 1); }

    /// theta0 + omega0.
    double transversality() const noexcept { return theta_[0] + omega_[0]; }

private:
    Vec theta_;
    Vec omega_;
};

/// The line x = X + tau*theta, y = Y + tau*omega with X0 + Y0 = 0.
class CharacteristicLine
{
public:
    CharacteristicLine(Vec X, Vec Y, DirectionPair dir) : X_(std::move(X)), Y_(std::move(Y)), dir_(std::move(dir))
    {
        if (X_.size() != dir_.theta().size() || Y_.size() != dir_.omega().size())
            throw DomainError("CharacteristicLine: X/Y lengths do not match the directions");
        if (std::abs(X_[0] + Y_[0]) > 1e-12)
            throw DomainError("CharacteristicLine: base point must satisfy X0 + Y0 = 0");
        for (double v : X_)
            if (!std::isfinite(v))
                throw DomainError("CharacteristicLine: non-finite base point");
        for (double v : Y_)
            if (!std::isfinite(v))
                throw DomainError("CharacteristicLine: non-finite base point");
    }

    const Vec& X() const noexcept { return X_; }
    const Vec& Y() const noexcept { return Y_; }
    const DirectionPair& dir() const noexcept { return dir_; }
    Dims dims() const { return dir_.dims(); }

    /// |X| + |Y|, the bound R of the base point.
    double radius() const { return norm(X_) + norm(Y_); }

private:
    Vec X_;
    Vec Y_;
    DirectionPair dir_;
};

inline LightConePoint line_point(const CharacteristicLine& line, double tau)
{
    LightConePoint p{line.X(), line.Y()};
    for (std::size_t i = 0; i < p.x.size(); ++i)
        p.x[i] += tau * line.dir().theta()[i];
    for (std::size_t i = 0; i < p.y.size(); ++i)
        p.y[i] += tau * line.dir().omega()[i];
    return p;
}

/// Lab time of the point at parameter tau: t = tau (theta0 + omega0) / 2.
inline double line_time(const CharacteristicLine& line, double tau)
{
    return 0.5 * tau * line.dir().transversality();
}

/// p = X.theta - Y.omega.
inline double shift_parameter(const CharacteristicLine& line)
{
    return dot(line.X(), line.dir().theta()) - dot(line.Y(), line.dir().omega());
}

/// Multi-index (beta_0..beta_d, beta_{d+1}..beta_{N+1}) for d/dx and d/dy.
class MultiIndex
{
public:
    MultiIndex(const Dims& dims, std::vector<int> beta) : dims_(dims), beta_(std::move(beta))
    {
        if (static_cast<int>(beta_.size()) != dims.N() + 2)
            throw DomainError("MultiIndex: expected N + 2 = " + std::to_string(dims.N() + 2) + " entries");
        for (int b : beta_)
            if (b < 0)
                throw DomainError("MultiIndex: entries must be nonnegative");
    }

    static MultiIndex zero(const Dims& dims) { return MultiIndex(dims, std::vector<int>(dims.N() + 2, 0)); }

    const Dims& dims() const noexcept { return dims_; }
    const std::vector<int>& values() const noexcept { return beta_; }
    int operator[](std::size_t i) const { return beta_[i]; }

    /// |beta|.
    int order() const
    {
        int s = 0;
        for (int b : beta_)
            s += b;
        return s;
    }

    /// Exponent on the x-component x_k (k = 0..d) and on y_k (k = 0..n).
    int x_power(int k) const { return beta_[k]; }
    int y_power(int k) const { return beta_[dims_.d() + 1 + k]; }

private:
    Dims dims_;
    std::vector<int> beta_;
};

/// (i xi_0)^{b_0} ... (i xi_d)^{b_d} (-i eta_0)^{b_{d+1}} ... (-i eta_n)^{b_{N+1}}.
inline cplx symbol_at(const MultiIndex& beta, std::span<const double> xi, std::span<const double> eta)
{
    const cplx I(0.0, 1.0);
    cplx p = 1.0;
    for (int k = 0; k <= beta.dims().d(); ++k)
        for (int e = 0; e < beta.x_power(k); ++e)
            p *= I * xi[k];
    for (int k = 0; k <= beta.dims().n(); ++k)
        for (int e = 0; e < beta.y_power(k); ++e)
            p *= -I * eta[k];
    return p;
}

/// P^beta(theta, omega).
inline cplx symbol_P_beta(const MultiIndex& beta, const DirectionPair& dir)
{
    if (!(beta.dims() == dir.dims()))
        throw DomainError("symbol_P_beta: dimension mismatch");
    return symbol_at(beta, dir.theta(), dir.omega());
}

struct SphericalChart
{
    Vec zeta;
    Vec sigma;
    double r = 0.0;
};

struct GraphChart
{
    double lambda = 0.0;
    Vec xibar;
    Vec etabar;
};

/// A point of the cone xi^2 = eta^2 with the induced measure weight of the
/// chart it was produced from.
struct ConeChart
{
    Vec xi;
    Vec eta;
    std::variant<SphericalChart, GraphChart> chart;
    double measure_weight = 0.0;

    double radius() const { return norm(xi); }
    /// xi^2 - eta^2.
    double upsilon() const { return norm2(xi) - norm2(eta); }
};

/// (zeta, sigma, r) -> (r zeta, r sigma) with weight r^{N-1}/2.
inline ConeChart cone_from_spherical(Vec zeta, Vec sigma, double r)
{
    if (zeta.size() < 2 || sigma.size() < 2)
        throw DomainError("cone_from_spherical: zeta and sigma need at least two components");
    if (std::abs(norm(zeta) - 1.0) > 1e-12 || std::abs(norm(sigma) - 1.0) > 1e-12)
        throw DomainError("cone_from_spherical: zeta and sigma must be unit vectors");
    if (!(r > 0.0))
        throw DomainError("cone_from_spherical: r must be positive");
    const int N = static_cast<int>(zeta.size() + sigma.size()) - 2;
    ConeChart c;
    c.xi = zeta;
    c.eta = sigma;
    for (double& v : c.xi)
        v *= r;
    for (double& v : c.eta)
        v *= r;
    c.measure_weight = 0.5 * std::pow(r, N - 1);
    c.chart = SphericalChart{std::move(zeta), std::move(sigma), r};
    return c;
}

/// Graph chart (lambda, xi-bar, eta-bar) with lambda = xi0 + eta0 != 0; the
/// induced weight is 1/(2|lambda|) per unit d(lambda) d(xi-bar) d(eta-bar).
inline ConeChart cone_from_graph(double lambda, Vec xibar, Vec etabar)
{
    if (lambda == 0.0 || !std::isfinite(lambda))
        throw DomainError("cone_from_graph: lambda = 0 lies on C0 u C1 where the graph chart breaks down");
    if (xibar.empty() || etabar.empty())
        throw DomainError("cone_from_graph: xi-bar and eta-bar must be non-empty");
    const double q = (norm2(etabar) - norm2(xibar)) / lambda;
    ConeChart c;
    c.xi.push_back(0.5 * (lambda + q));
    c.eta.push_back(0.5 * (lambda - q));
    c.xi.insert(c.xi.end(), xibar.begin(), xibar.end());
    c.eta.insert(c.eta.end(), etabar.begin(), etabar.end());
    c.measure_weight = 0.5 / std::abs(lambda);
    c.chart = GraphChart{lambda, std::move(xibar), std::move(etabar)};
    return c;
}

/// Phi(xi, eta) = theta.xi - omega.eta.
inline double phase_Phi(std::span<const double> xi, std::span<const double> eta, const DirectionPair& dir)
{
    return dot(dir.theta(), xi) - dot(dir.omega(), eta);
}

inline double phase_Phi(const ConeChart& c, const DirectionPair& dir) { return phase_Phi(c.xi, c.eta, dir); }

enum class Stratum
{
    C1,
    C0,
    Stationary,
    Generic
};

inline const char* to_string(Stratum s)
{
    switch (s) {
    case Stratum::C1: return "C1";
    case Stratum::C0: return "C0";
    case Stratum::Stationary: return "C_st";
    case Stratum::Generic: return "generic";
    }
    return "?";
}

/// Stratum of a cone point, tolerances relative to r (the strata are cones).
/// Precedence C1 > C0 > C_st.
inline Stratum classify_cone_point(const ConeChart& c, const DirectionPair& dir, double tol)
{
    const double r = c.radius();
    if (!(r > 0.0))
        throw DomainError("classify_cone_point: the origin is not a point of C");
    if (std::abs(c.upsilon()) > std::max(tol, 1e-10) * (norm2(c.xi) + norm2(c.eta)))
        throw DomainError("classify_cone_point: point is off the cone");
    const std::span<const double> xibar(c.xi.data() + 1, c.xi.size() - 1);
    const std::span<const double> etabar(c.eta.data() + 1, c.eta.size() - 1);
    const double ups0 = std::abs(c.xi[0] + c.eta[0]);
    if (ups0 <= tol * r) {
        if (norm(xibar) + norm(etabar) <= tol * r)
            return Stratum::C1;
        if (norm(xibar) > tol * r)
            return Stratum::C0;
    }
    for (double sign : {1.0, -1.0}) {
        double dist2 = 0.0;
        for (std::size_t i = 0; i < c.xi.size(); ++i) {
            const double e = c.xi[i] / r - sign * dir.theta()[i];
            dist2 += e * e;
        }
        for (std::size_t i = 0; i < c.eta.size(); ++i) {
            const double e = c.eta[i] / r - sign * dir.omega()[i];
            dist2 += e * e;
        }
        if (std::sqrt(dist2) <= tol)
            return Stratum::Stationary;
    }
    return Stratum::Generic;
}

} // namespace charwave
