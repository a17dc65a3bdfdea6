#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <numbers>

#include "charwave/asymptotics.hpp"

using namespace charwave;
using std::numbers::pi;

namespace
{

CharacteristicLine canonical_line()
{
    return CharacteristicLine({0.3, 0.2}, {-0.3, 0.1}, DirectionPair({std::cos(0.4), std::sin(0.4)}, {std::cos(-0.3), std::sin(-0.3)}));
}

DirectionPair pair_for(const Dims& dims)
{
    const Vec t = dims.d() == 1 ? Vec{std::cos(0.4), std::sin(0.4)} : unit_from_angles(2, std::vector<double>{0.4, 0.9});
    const Vec o = dims.n() == 1 ? Vec{std::cos(-0.3), std::sin(-0.3)} : unit_from_angles(2, std::vector<double>{0.3, -1.2});
    return DirectionPair(t, o);
}

/// Fixed 61-point Kronrod rule on uniform panels over the two r-supports.
cplx fixed_rule_F(const SpectralProfile& p, const MultiIndex& beta, const DirectionPair& dir, double pp, int panels)
{
    const double c = dir.transversality();
    const auto& s = p.support();
    auto f = [&](double r) -> cplx {
        Vec xi{r * dir.theta()[1]}, eta{r * dir.omega()[1]};
        const cplx v = p(r * c, xi, eta);
        return v == 0.0 ? cplx(0.0) : std::polar(1.0, r * pp) * G_factor(r, p.dims(), beta) * v;
    };
    cplx total = 0.0;
    for (double sg : {-1.0, 1.0}) {
        const double lo = s.lambda_min / std::abs(c), hi = s.lambda_max / std::abs(c);
        const double h = (hi - lo) / panels;
        for (int k = 0; k < panels; ++k) {
            const double a = sg * (lo + k * h), b = sg * (lo + (k + 1) * h);
            auto re = boost::math::quadrature::gauss_kronrod<double, 61>::integrate([&](double r) { return f(r).real(); }, std::min(a, b),
                                                                                   std::max(a, b), 0);
            auto im = boost::math::quadrature::gauss_kronrod<double, 61>::integrate([&](double r) { return f(r).imag(); }, std::min(a, b),
                                                                                   std::max(a, b), 0);
            total += cplx(re, im);
        }
    }
    return symbol_P_beta(beta, dir) * std::abs(c) * total;
}

} // namespace

TEST(Asymptotics, GFactorExamples)
{
    Dims d11(1, 1), d21(2, 1);
    EXPECT_NEAR(std::abs(G_factor(1.0, d11, MultiIndex::zero(d11)) - cplx(1.0 / (8 * pi * pi))), 0.0, 1e-15);
    EXPECT_NEAR(G_factor(1.0, d11, MultiIndex::zero(d11)).real(), 0.0126651, 1e-7);
    EXPECT_NEAR(std::abs(G_factor(-1.0, d11, MultiIndex::zero(d11)) - G_factor(1.0, d11, MultiIndex::zero(d11))), 0.0, 1e-16);
    const cplx expect = std::polar(1.0 / (2 * std::pow(2 * pi, 2.5)), -pi / 4);
    EXPECT_NEAR(std::abs(G_factor(1.0, d21, MultiIndex::zero(d21)) - expect), 0.0, 1e-16);
    // odd order picks up sgn(r)
    MultiIndex b(d11, {1, 0, 0, 0});
    EXPECT_NEAR(std::abs(G_factor(-2.0, d11, b) + std::pow(2.0, 2.0) / (8 * pi * pi)), 0.0, 1e-15);
    EXPECT_THROW(G_factor(0.0, d11, MultiIndex::zero(d11)), DomainError);
}

TEST(Asymptotics, CoefficientOfZeroDataVanishes)
{
    Dims dims(1, 1);
    auto z = make_zero_profile(dims);
    EXPECT_EQ(coefficient_F(z, MultiIndex::zero(dims), canonical_line().dir(), 0.3).value, cplx(0.0));
}

TEST(Asymptotics, CoefficientMatchesFixedRuleOracle)
{
    Dims dims(1, 1);
    auto p = make_bump_profile(dims, {});
    const auto dir = canonical_line().dir();
    for (double pp : {0.0, 0.21, -3.5, 12.0}) {
        auto F = coefficient_F(p, MultiIndex::zero(dims), dir, pp);
        const cplx a = fixed_rule_F(p, MultiIndex::zero(dims), dir, pp, 64);
        const cplx b = fixed_rule_F(p, MultiIndex::zero(dims), dir, pp, 128);
        EXPECT_LT(std::abs(a - b), 1e-12);
        EXPECT_LT(std::abs(F.value - b), 1e-10) << "p = " << pp;
    }
    EXPECT_GT(std::abs(coefficient_F(p, MultiIndex::zero(dims), dir, 0.21).value), 1e-4);
}

TEST(Asymptotics, ShiftInPIsAModulation)
{
    Dims dims(1, 1);
    auto p = make_bump_profile(dims, {});
    const auto dir = canonical_line().dir();
    const double c = dir.transversality();
    const double delta = 0.8;
    auto shifted = p.modulated([=](double l) { return std::polar(1.0, delta * l / c); });
    for (double pp : {0.0, 0.4, -2.0}) {
        auto a = coefficient_F(p, MultiIndex::zero(dims), dir, pp + delta);
        auto b = coefficient_F(shifted, MultiIndex::zero(dims), dir, pp);
        EXPECT_LT(std::abs(a.value - b.value), 1e-12);
    }
}

TEST(Asymptotics, CoefficientIsLinearInTheData)
{
    Dims dims(1, 2);
    auto p = make_bump_profile(dims, {});
    const auto dir = pair_for(dims);
    const cplx k(0.3, -1.7);
    auto a = coefficient_F(p, MultiIndex::zero(dims), dir, 0.5);
    auto b = coefficient_F(p.scaled(k), MultiIndex::zero(dims), dir, 0.5);
    EXPECT_LT(std::abs(b.value - k * a.value), 1e-13);
}

TEST(Asymptotics, SymbolFactorMatchesReweightedData)
{
    Dims dims(1, 1);
    auto p = make_bump_profile(dims, {});
    const auto dir = canonical_line().dir();
    for (auto bv : std::vector<std::vector<int>>{{1, 0, 0, 0}, {0, 1, 1, 0}, {1, 0, 0, 1}, {0, 0, 2, 0}}) {
        MultiIndex beta(dims, bv);
        auto w = p.reweighted([beta](double l, std::span<const double> xb, std::span<const double> yb) {
            auto c = cone_from_graph(l, Vec(xb.begin(), xb.end()), Vec(yb.begin(), yb.end()));
            return symbol_at(beta, c.xi, c.eta);
        });
        auto a = coefficient_F(p, beta, dir, 0.21);
        auto b = coefficient_F(w, MultiIndex::zero(dims), dir, 0.21);
        EXPECT_LT(std::abs(a.value - b.value), 1e-12 * std::max(1.0, std::abs(a.value)));
        const int order = beta.order();
        const double c = dir.transversality();
        auto radial = p.reweighted([order, c](double l, std::span<const double>, std::span<const double>) { return cplx(std::pow(l / c, order)); });
        const cplx e = symbol_P_beta(beta, dir) * coefficient_F(radial, MultiIndex::zero(dims), dir, 0.21).value;
        EXPECT_LT(std::abs(a.value - e), 1e-12 * std::max(1.0, std::abs(a.value)));
    }
}

TEST(Asymptotics, PhaseIsStationaryAtBothBranches)
{
    for (int d : {1, 2})
        for (int n : {1, 2}) {
            Dims dims(d, n);
            const auto dir = pair_for(dims);
            for (int br : {1, -1}) {
                auto h = hessian_phase_factor(dir, br);
                EXPECT_LE(h.gradient_norm, 1e-8);
                EXPECT_EQ(h.signature, br * (n - d));
                EXPECT_NEAR(std::abs(h.factor - std::polar(1.0, br * pi * (n - d) / 4)), 0.0, 1e-15);
                for (double ev : h.eigenvalues)
                    EXPECT_NEAR(std::abs(ev), 1.0, 1e-6);
            }
        }
    EXPECT_THROW(hessian_phase_factor(canonical_line().dir(), 0), DomainError);
}

TEST(Asymptotics, BruteSphereIntegralIntegratesASmoothBump)
{
    // with Lambda -> 0 the integral of kappa over the flat ball of S^1 x S^1 is
    // 2 pi rho^2 int_0^1 kappa(s) s ds
    Dims dims(1, 1);
    const auto dir = pair_for(dims);
    const double rho = 0.35;
    LocalAmplitude amp;
    amp.radius = rho;
    amp.minus = false;
    amp.B = [&](std::span<const double> z, std::span<const double> s) -> cplx {
        const double a = detail::geodesic(z, dir.theta(), 1.0), b = detail::geodesic(s, dir.omega(), 1.0);
        return detail::smooth_bump(std::sqrt(a * a + b * b) / rho);
    };
    auto r = sphere_integral_brute(amp, dir, 1e-9);
    const double m = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        [](double s) { return detail::smooth_bump(s) * s; }, 0.0, 1.0, 15, 1e-15);
    EXPECT_NEAR(r.value.real(), 2 * pi * rho * rho * m, 1e-9);
}

TEST(Asymptotics, StationaryPhaseRemainderDecays)
{
    for (int d : {1, 2})
        for (int n : {1, 2}) {
            Dims dims(d, n);
            auto p = make_bump_profile(dims, {});
            const auto dir = pair_for(dims);
            auto amp = make_profile_amplitude(p, MultiIndex::zero(dims), 0.7, dir, 0.35);
            std::vector<std::pair<double, double>> rem;
            for (double L : {50.0, 100.0, 200.0, 400.0, 800.0}) {
                auto I = sphere_integral_brute(amp, dir, L);
                auto lp = sphere_stationary_phase_leading(amp.B, dir, L, 1);
                auto lm = sphere_stationary_phase_leading(amp.B, dir, L, -1);
                ASSERT_TRUE(lp.in_support && lm.in_support);
                const double e = std::abs(I.value - lp.value - lm.value);
                EXPECT_LT(I.est_error, 1e-3 * e);
                rem.emplace_back(L, e);
            }
            auto fit = fit_decay_rate(rem);
            EXPECT_LE(fit.slope, -0.5 * dims.N() - 0.4) << "d=" << d << " n=" << n;
        }
}

TEST(Asymptotics, MixedDimensionPhaseIsMinusQuarterPi)
{
    Dims dims(2, 1);
    auto p = make_bump_profile(dims, {});
    const auto dir = pair_for(dims);
    auto amp = make_profile_amplitude(p, MultiIndex::zero(dims), 0.7, dir, 0.35, true, false);
    const cplx b0 = amp.B(dir.theta(), dir.omega());
    auto R = [&](double L) {
        auto I = sphere_integral_brute(amp, dir, L);
        return std::arg(I.value / (std::pow(2 * pi / L, 1.5) * b0));
    };
    const double phase = 2 * R(1600.0) - R(800.0);
    EXPECT_NEAR(phase, -pi / 4, 1e-3);
    const auto lead = sphere_stationary_phase_leading(amp.B, dir, 300.0, 1);
    EXPECT_NEAR(std::arg(lead.value / (b0 * std::pow(2 * pi / 300.0, 1.5))), -pi / 4, 1e-12);
}

TEST(Asymptotics, LeadingTermFlagsStationaryPointOutsideSupport)
{
    Dims dims(1, 1);
    auto p = make_bump_profile(dims, {});
    const auto dir = canonical_line().dir();
    auto amp = make_profile_amplitude(p, MultiIndex::zero(dims), 0.7, dir, 0.35, true, false);
    EXPECT_TRUE(sphere_stationary_phase_leading(amp.B, dir, 100.0, 1).in_support);
    auto off = sphere_stationary_phase_leading(amp.B, dir, 100.0, -1);
    EXPECT_FALSE(off.in_support);
    EXPECT_EQ(off.value, cplx(0.0));
}

TEST(Asymptotics, FitRecoversKnownRates)
{
    auto a = fit_decay_rate({{10, 1e-2}, {100, 1e-3}}, 2);
    EXPECT_NEAR(a.slope, -1.0, 1e-14);
    EXPECT_NEAR(a.residual, 0.0, 1e-14);
    std::vector<std::pair<double, double>> exact, noisy;
    for (int i = 0; i < 20; ++i) {
        const double t = 10.0 * std::pow(30.0, i / 19.0);
        exact.emplace_back(t, 3.0 * std::pow(t, -1.5));
        noisy.emplace_back(t, 3.0 * std::pow(t, -1.5) * (1.0 + 0.1 * std::sin(t)));
    }
    EXPECT_NEAR(fit_decay_rate(exact).slope, -1.5, 1e-12);
    EXPECT_NEAR(fit_decay_rate(exact).intercept, std::log(3.0), 1e-12);
    EXPECT_NEAR(fit_decay_rate(noisy).slope, -1.5, 0.05);
    EXPECT_THROW(fit_decay_rate({{1, 1}, {2, 0}, {3, 1}, {4, 1}}), DomainError);
    EXPECT_THROW(fit_decay_rate({{1, 1}, {1, 1}, {3, 1}, {4, 1}}), DomainError);
    EXPECT_THROW(fit_decay_rate({{10, 1e-2}, {100, 1e-3}}), DomainError);
}

TEST(Asymptotics, VerifyTheoremRejectsZeroData)
{
    Dims dims(1, 1);
    EXPECT_THROW(verify_theorem(make_zero_profile(dims), canonical_line(), MultiIndex::zero(dims), {5, 10, 20, 40}), DomainError);
}

TEST(Asymptotics, TheoremRemainderBeatsLeadingDecay)
{
    Dims dims(1, 1);
    auto p = make_bump_profile(dims, {});
    TheoremOptions o;
    o.threads = 4;
    auto rep = verify_theorem(p, canonical_line(), MultiIndex::zero(dims), {5, 10, 20, 40, 80}, o);
    EXPECT_NEAR(rep.leading.slope, -1.0, 0.1);
    EXPECT_LE(rep.remainder.slope, -1.35);
    EXPECT_GT(std::abs(rep.F.value), 1e-6);
}
