#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "charwave/propagator.hpp"

using namespace charwave;
using std::numbers::pi;

namespace
{

LightConePoint lc(double t, double s, Vec xb, Vec yb) { return lab_to_lightcone({t, s, std::move(xb), std::move(yb)}); }

// Grid with a long s axis so that wrap-around of the algebraic s-tails is
// far below 1e-8 at the central nodes.
GridConfig wide_grid()
{
    GridConfig g;
    g.nodes = 64;
    g.box = 64.0;
    g.s_nodes = 256;
    g.s_box = 256.0;
    return g;
}

} // namespace

TEST(Propagator, MultiplierIdentities)
{
    EvolutionMultiplier m0(0.0);
    Vec xi{0.3, -1.2}, eta{2.0};
    EXPECT_EQ(m0(1.3, xi, eta), cplx(1.0));
    EvolutionMultiplier m(7.5);
    Vec a{0.6, 0.8}, b{1.0};
    EXPECT_NEAR(std::abs(m(1.7, a, b) - 1.0), 0.0, 1e-15);
    EXPECT_THROW(m(0.0, a, b), DomainError);

    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> L(1.0, 2.0), K(-3.0, 3.0), T(-100.0, 100.0);
    for (int i = 0; i < 100000; ++i) {
        EvolutionMultiplier mt(T(rng));
        Vec x{K(rng), K(rng)}, y{K(rng)};
        ASSERT_LE(std::abs(std::abs(mt(L(rng), x, y)) - 1.0), 1e-15);
    }
}

TEST(Propagator, InitialSliceReproducesV0)
{
    auto p = make_bump_profile(Dims(1, 1), {});
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> U(-4.0, 4.0);
    for (int i = 0; i < 5; ++i) {
        const double s = U(rng);
        Vec xb{U(rng)}, yb{U(rng)};
        auto u = evaluate_u_point(p, lc(0.0, s, xb, yb));
        auto v = evaluate_v0(p, s, xb, yb);
        EXPECT_NEAR(std::abs(u.value - v.value), 0.0, 1e-9);
    }
}

TEST(Propagator, ZeroDataGiveZero)
{
    auto z = make_zero_profile(Dims(1, 1));
    EXPECT_EQ(evaluate_u_point(z, lc(1.0, 0.5, {0.2}, {0.1})).value, cplx(0.0));
    GridConfig g;
    g.nodes = 16;
    g.box = 16.0;
    EXPECT_EQ(pde_residual(z, g, 1.0, 0.01), 0.0);
}

// Closed-form oracle. With a Gaussian whose cutoff is far out in the tail,
// each transversal integral is a Fresnel-Gauss integral
//   int exp(-k^2/(2a^2)) exp(i(c1 k + c2 k^2)) dk = sqrt(pi/A) exp(-c1^2/(4A)),
// A = 1/(2a^2) - i c2, and only the lambda integral is left; it is done here by
// a dense fixed Gauss-Legendre product rule.
TEST(Propagator, MatchesFresnelClosedForm)
{
    BumpParams bp;
    bp.mirror = false;
    bp.cut_inner = 12.0;
    bp.cut_outer = 14.0;
    auto p = make_bump_profile(Dims(1, 1), bp);
    const double a = bp.width_a;
    auto fresnel = [a](double c1, double c2) {
        const cplx A(1.0 / (2 * a * a), -c2);
        return std::sqrt(pi / A) * std::exp(-c1 * c1 / (4.0 * A));
    };
    auto gl = quad::gauss_legendre(60);
    for (auto [t, s, x, y] : {std::array<double, 4>{0.7, 0.3, 0.5, -0.4}, std::array<double, 4>{3.0, -1.0, 1.2, 0.8},
                              std::array<double, 4>{-2.0, 2.5, -0.6, 0.0}}) {
        cplx acc = 0.0;
        for (auto [lo, hi] : {std::pair{1.0, 1.5}, std::pair{1.5, 2.0}})
            for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
                const double l = 0.5 * (lo + hi) + 0.5 * (hi - lo) * gl.nodes[i];
                const double w = 0.5 * (hi - lo) * gl.weights[i];
                acc += w * p.factors().lambda(l) * std::polar(1.0, s * l) * fresnel(x, -t / l) * fresnel(-y, t / l);
            }
        const cplx exact = 0.5 * std::pow(2 * pi, -3.0) * acc;
        auto u = evaluate_u_point(p, lc(t, s, {x}, {y}));
        EXPECT_NEAR(std::abs(u.value - exact), 0.0, 1e-12) << "t = " << t;
    }
}

TEST(Propagator, DerivativeOfOrderZeroIsTheValue)
{
    auto p = make_bump_profile(Dims(1, 1), {});
    auto pt = lc(1.1, 0.4, {0.3}, {-0.2});
    EXPECT_EQ(evaluate_dbeta_u_point(p, pt, MultiIndex::zero(Dims(1, 1))).value, evaluate_u_point(p, pt).value);
    PointOptions o;
    o.max_order = 2;
    EXPECT_THROW(evaluate_dbeta_u_point(p, pt, MultiIndex(Dims(1, 1), {1, 1, 1, 0}), o), DomainError);
}

TEST(Propagator, FirstDerivativeMatchesFiniteDifference)
{
    Dims dims(1, 1);
    auto p = make_bump_profile(dims, {});
    auto base = lc(1.3, 0.2, {0.4}, {-0.7});
    const double h = 1e-3;
    for (int k = 0; k < 4; ++k) {
        std::vector<int> b(4, 0);
        b[k] = 1;
        auto shifted = [&](double e) {
            auto q = base;
            if (k < 2)
                q.x[k] += e;
            else
                q.y[k - 2] += e;
            return evaluate_u_point(p, q).value;
        };
        const cplx fd = (shifted(h) - shifted(-h)) / (2 * h);
        const cplx sp = evaluate_dbeta_u_point(p, base, MultiIndex(dims, b)).value;
        EXPECT_LT(std::abs(sp - fd), 1e-5 * std::abs(sp)) << "component " << k;
    }
}

TEST(Propagator, MixedDerivativeMatchesFiniteDifference)
{
    Dims dims(1, 1);
    auto p = make_bump_profile(dims, {});
    auto base = lc(0.8, -0.5, {0.1}, {0.6});
    const double h = 1e-3;
    auto at = [&](double ex, double ey) {
        auto q = base;
        q.x[0] += ex;
        q.y[0] += ey;
        return evaluate_u_point(p, q).value;
    };
    const cplx fd = (at(h, h) - at(h, -h) - at(-h, h) + at(-h, -h)) / (4 * h * h);
    const cplx sp = evaluate_dbeta_u_point(p, base, MultiIndex(dims, {1, 0, 1, 0})).value;
    EXPECT_LT(std::abs(sp - fd), 1e-4 * std::abs(sp));
}

TEST(Propagator, PointValuesSatisfyThePde)
{
    // (d_x0^2 - d_y0^2 + d_x1^2 - d_y1^2) u = 0 from the spectral derivatives
    Dims dims(1, 1);
    auto p = make_bump_profile(dims, {});
    auto pt = lc(2.0, 0.3, {0.5}, {0.2});
    auto D = [&](std::vector<int> b) { return evaluate_dbeta_u_point(p, pt, MultiIndex(dims, b)).value; };
    const cplx r = D({2, 0, 0, 0}) - D({0, 0, 2, 0}) + D({0, 2, 0, 0}) - D({0, 0, 0, 2});
    EXPECT_LT(std::abs(r), 1e-11);
}

TEST(Propagator, GridAtTimeZeroMatchesPointValues)
{
    auto p = make_bump_profile(Dims(1, 1), {});
    const auto g = wide_grid();
    auto f = evolve_grid(p, g, 0.0);
    std::mt19937_64 rng(12);
    std::uniform_int_distribution<std::size_t> S(96, 160), X(16, 48);
    for (int i = 0; i < 12; ++i) {
        std::vector<std::size_t> idx{S(rng), X(rng), X(rng)};
        const std::size_t flat = f.flat(idx);
        auto z = f.coordinates(flat);
        auto v = evaluate_v0(p, z[0], Vec{z[1]}, Vec{z[2]});
        EXPECT_NEAR(std::abs(f.values[flat] - v.value), 0.0, 1e-8);
    }
}

TEST(Propagator, GridRefinementAgreesOnCoarseNodes)
{
    auto p = make_bump_profile(Dims(1, 1), {});
    GridConfig coarse;
    coarse.nodes = 32;
    coarse.box = 30.0;
    GridConfig fine = coarse;
    fine.nodes = 64;
    auto a = evolve_grid(p, coarse, 1.5);
    auto b = evolve_grid(p, fine, 1.5);
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        auto idx = a.index(i);
        for (auto& k : idx)
            k *= 2;
        worst = std::max(worst, std::abs(a.values[i] - b.values[b.flat(idx)]));
    }
    EXPECT_LT(worst, 1e-8);
}

TEST(Propagator, GridMatchesPointEvaluationAtPositiveTime)
{
    auto p = make_bump_profile(Dims(1, 1), {});
    const auto g = wide_grid();
    const double t = 1.7;
    auto f = evolve_grid(p, g, t);
    for (std::vector<std::size_t> idx : {std::vector<std::size_t>{128, 32, 32}, std::vector<std::size_t>{120, 36, 29},
                                         std::vector<std::size_t>{140, 30, 35}}) {
        auto z = f.coordinates(f.flat(idx));
        auto u = evaluate_u_point(p, lc(t, z[0], {z[1]}, {z[2]}));
        EXPECT_NEAR(std::abs(f.values[f.flat(idx)] - u.value), 0.0, 1e-8);
    }
}

TEST(Propagator, NyquistViolationIsRejected)
{
    auto p = make_bump_profile(Dims(1, 1), {});
    GridConfig g;
    g.nodes = 16;
    g.box = 64.0; // Nyquist pi/4
    EXPECT_THROW(evolve_grid(p, g, 0.0), DomainError);
}

TEST(Propagator, ConservationHoldsAndIsBlindToPhaseErrors)
{
    auto p = make_bump_profile(Dims(1, 1), {});
    GridConfig g;
    g.nodes = 48;
    g.box = 48.0;
    std::vector<double> none{0.0};
    EXPECT_EQ(conservation_check(p, g, none), 0.0);
    std::vector<double> ts{1.0, 5.0, 25.0};
    EXPECT_LE(conservation_check(p, g, ts), 1e-12);
    EXPECT_LE(conservation_check(p, g, ts, MultiplierFault::DoublePhase), 1e-12);
    // The grid norm is a Riemann sum of the Plancherel integral over the dual
    // grid; it converges to the continuum norm as the box grows.
    EXPECT_NEAR(evolve_grid(p, wide_grid(), 0.0).l2_norm / v0_l2_norm(p), 1.0, 1e-6);
}

TEST(Propagator, ResidualIsSecondOrderAndDetectsFaults)
{
    auto p = make_bump_profile(Dims(1, 1), {});
    GridConfig g;
    g.nodes = 48;
    g.box = 48.0;
    const double r1 = pde_residual(p, g, 2.0, 0.02);
    const double r2 = pde_residual(p, g, 2.0, 0.01);
    EXPECT_NEAR(r1 / r2, 4.0, 0.5);
    const double f1 = pde_residual(p, g, 2.0, 0.02, MultiplierFault::FlipEtaSign);
    const double f2 = pde_residual(p, g, 2.0, 0.01, MultiplierFault::FlipEtaSign);
    EXPECT_LT(f1 / f2, 1.5);
    EXPECT_GT(f2, 100.0 * r2);
}

TEST(Propagator, DerivativePolynomialOfZeroComponent)
{
    // d/dx0 <-> i xi0 = (i/2)(lambda + (|eta|^2 - |xi|^2)/lambda)
    Dims dims(1, 1);
    auto poly = derivative_polynomial(MultiIndex(dims, {1, 0, 0, 0}));
    Vec xi{0.7}, eta{-1.3};
    const double l = 1.4;
    const cplx expect = cplx(0.0, 0.5) * (l + (eta[0] * eta[0] - xi[0] * xi[0]) / l);
    EXPECT_NEAR(std::abs(poly.evaluate(l, xi, eta) - expect), 0.0, 1e-15);
    auto c = cone_from_graph(l, xi, eta);
    EXPECT_NEAR(std::abs(poly.evaluate(l, xi, eta) - symbol_at(MultiIndex(dims, {1, 0, 0, 0}), c.xi, c.eta)), 0.0, 1e-15);
}
