#include <lrs/coords.hpp>

#include <gtest/gtest.h>

using namespace lrs;

TEST(Coords, CutoffProfile) {
    CutoffSpec chi;
    EXPECT_EQ(chi(0), 1.0);
    EXPECT_EQ(chi(0.25), 1.0);
    EXPECT_EQ(chi(-0.75), 0.0);
    EXPECT_NEAR(chi(0.5), 0.5, 1e-15);
    double prev = 1;
    for (int i = 0; i <= 1000; ++i) {
        double v = 0.25 + 0.5 * i / 1000.0, c = chi(v);
        EXPECT_GE(c, 0);
        EXPECT_LE(c, prev + 1e-15);
        prev = c;
        double h = 1e-6;
        EXPECT_NEAR(chi.deriv(v), (chi(v + h) - chi(v - h)) / (2 * h), 1e-6);
        EXPECT_NEAR(chi.deriv(-v), -chi.deriv(v), 1e-15);
    }
    EXPECT_GT(chi.max_slope(), 2.0);
    EXPECT_THROW(CutoffSpec(0.5, 0.5), std::invalid_argument);
    EXPECT_THROW(CutoffSpec(0, 1), std::invalid_argument);
}

TEST(Coords, LogifyExamples) {
    EXPECT_EQ(logify_point(0, 0.3, 2.0).v_bar, 0.3);
    EXPECT_EQ(logify_point(0.2, -0.1, 0.0).v_bar, -0.1);
    EXPECT_NEAR(logify_point(std::exp(-1.0), 0, 1).v_bar, -std::exp(-1.0), 1e-16);
    EXPECT_EQ(logify_point(0.2, 0.9, 1.0).v_bar, 0.9);
    EXPECT_THROW(logify_point(-1e-3, 0, 1), std::domain_error);
}

TEST(Coords, UnlogifyRoundTrip) {
    CutoffSpec chi;
    EXPECT_EQ(unlogify_point(0, 0.4, 3).v, 0.4);
    EXPECT_EQ(unlogify_point(0.1, 0.4, 0).v, 0.4);
    for (int i = 0; i < 300; ++i) {
        auto u = kronecker_point(i, 3);
        double rho = 0.02 * u[0], v = 1.8 * u[1] - 0.9, m = 2 * u[2] - 1;
        auto l = logify_point(rho, v, m, chi);
        auto back = unlogify_point(l.rho_bar, l.v_bar, m, chi);
        EXPECT_NEAR(back.v, v, 1e-10);
        EXPECT_EQ(back.rho, rho);
    }
    EXPECT_THROW(unlogify_point(0.3, 0.5, 5.0), std::domain_error);
}

TEST(Coords, BlowupReconstruction) {
    for (int i = 0; i < 100; ++i) {
        auto u = kronecker_point(i, 2);
        double rb = 1e-4 + u[0], vb = 2 * u[1] - 1;
        auto b = BlowupPoint::from_logified(rb, vb);
        EXPECT_NEAR(b.v_bar(), vb, 4 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::fabs(vb)));
    }
    EXPECT_DOUBLE_EQ(BlowupPoint::from_logified(0.5, 2).varpi(), 0.25);
    EXPECT_THROW(BlowupPoint::from_logified(0, 1), std::invalid_argument);
}

TEST(Coords, LiftExamples) {
    const double m = 0.8;
    auto r = lift_module_generator(Generator::rho_drho, m)(0.3, 1e-3);
    EXPECT_DOUBLE_EQ(r.L_ds, m);
    EXPECT_DOUBLE_EQ(r.rho_drho, 1);
    // outside the cutoff support every log slot vanishes
    auto v = lift_module_generator(Generator::v_dv, m)(900.0, 1e-3);
    EXPECT_EQ(v.L_ds, 0.0);
    EXPECT_EQ(v.L2_ds, 0.0);
    // on the plateau chi' = 0 and the v d_v log coefficient is -m
    auto vp = lift_module_generator(Generator::v_dv, m)(2.0, 1e-3);
    EXPECT_DOUBLE_EQ(vp.L_ds, -m);
    for (auto g : {Generator::rho_drho, Generator::v_dv, Generator::rho_dv}) {
        auto z = lift_module_generator(g, 0.0)(1.7, 0.01);
        EXPECT_EQ(z.L_ds, 0.0);
        EXPECT_EQ(z.L2_ds, 0.0);
    }
}

// lifted field on F(s, rho_bar) against finite differences of f(rho, v) = F(s(rho, v), rho)
TEST(CoordsProperty, LiftsMatchChainRule) {
    const double m = 0.9;
    CutoffSpec chi;
    auto F = [](double s, double rb) { return std::sin(0.3 * s) + rb * rb * s + rb * std::cos(s); };
    auto f = [&](double rho, double v) {
        auto l = logify_point(rho, v, m, chi);
        return F(l.v_bar / rho, rho);
    };
    for (int i = 0; i < 60; ++i) {
        auto u = kronecker_point(i, 2);
        double rho = 1e-3 + 0.01 * u[0], v = 1.6 * u[1] - 0.8;
        auto l = logify_point(rho, v, m, chi);
        double s = l.v_bar / rho, L = std::log(rho);
        // Richardson-extrapolated central differences
        auto D = [](auto g, double x, double h) {
            auto c = [&](double e) { return (g(x + e) - g(x - e)) / (2 * e); };
            return (4 * c(h / 2) - c(h)) / 3;
        };
        double Fs = D([&](double x) { return F(x, rho); }, s, 1e-3);
        double Fr = rho * D([&](double x) { return F(s, x); }, rho, 1e-3 * rho);
        double fr = rho * D([&](double x) { return f(x, v); }, rho, 1e-5 * rho);
        double fv = D([&](double x) { return f(rho, x); }, v, 1e-3 * rho);
        struct Case {
            Generator g;
            double want;
        } cases[] = {{Generator::rho_drho, fr}, {Generator::v_dv, v * fv}, {Generator::rho_dv, rho * fv}};
        for (const auto& c : cases) {
            auto k = lift_module_generator(c.g, m, chi)(s, rho);
            double got = k.rho_drho * Fr + (k.ds + k.L_ds * L + k.L2_ds * L * L) * Fs;
            EXPECT_NEAR(got, c.want, 1e-6 * std::max(1.0, std::fabs(c.want))) << generator_name(c.g) << " v=" << v;
        }
    }
}

TEST(Coords, SynthPhg) {
    auto one = [](const IndexEntry& e, double) { return cplx(e.k == 0 && same(e.z, Exponent(0, 0)) ? 1.0 : 0.0); };
    IndexSet E0(2.0, {entry(0, 0, 0)});
    EXPECT_EQ(synth_phg_point(E0, one, 0.37, 1.0), cplx(1.0));
    IndexSet E = IndexSet(2.5, {entry(0, -1, 2)}).closure();
    auto a = [](const IndexEntry& e, double) { return cplx(same(e.z, Exponent(0, -1)) && e.k == 2 ? 1.0 : 0.0); };
    for (double rho : {0.5, 0.01, 1e-5}) {
        double L = std::log(rho);
        EXPECT_NEAR(std::abs(synth_phg_point(E, a, rho, 0) - rho * L * L), 0, 1e-15 * std::max(1.0, rho * L * L));
    }
    auto M = synth_phg(E0, one, {0.1, 0.2}, {0, 1, 2});
    EXPECT_EQ(M.rows(), 2);
    EXPECT_EQ(M.cols(), 3);
    // rho^{iz} with Re z != 0 oscillates in log rho
    EXPECT_NEAR(std::abs(phg_term(Exponent(Rational(1, 2), 0), 0, 0.3)), 1.0, 1e-15);
}
