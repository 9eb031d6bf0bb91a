#include <lrs/asympt.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace lrs;

namespace {

std::vector<cplx> probe_sigmas() { return default_probe_lines(); }

struct Term {
    cplx z;
    int k;
    cplx c;
};

std::function<cplx(double)> phg_function(const std::vector<Term>& ts) {
    return [ts](double rho) {
        cplx s = 0;
        double L = std::log(rho);
        for (const auto& t : ts) s += t.c * std::exp(cplx(0, 1) * t.z * L) * std::pow(L, t.k);
        return s;
    };
}

cplx exact_transform(const std::vector<Term>& ts, cplx sigma) {
    cplx s = 0;
    for (const auto& t : ts)
        s += t.c * (t.k % 2 ? -1.0 : 1.0) * std::tgamma(t.k + 1.0) / std::pow(cplx(0, 1) * (t.z - sigma), t.k + 1);
    return s;
}

}  // namespace

TEST(Asympt, MellinMatchesExactTransform) {
    std::vector<Term> ts = {{{0, 0}, 0, 1.0}, {{0.4, -1}, 2, {0.3, -0.2}}, {{-1, -0.5}, 1, 2.0}};
    auto sl = mellin(phg_function(ts), probe_sigmas());
    EXPECT_FALSE(sl.divergent);
    EXPECT_EQ(sl.cutoff, "sharp");
    for (size_t i = 0; i < sl.sigma.size(); ++i) {
        cplx want = exact_transform(ts, sl.sigma[i]);
        EXPECT_LT(std::abs(sl.values[i] - want), 1e-12 * std::max(1.0, std::abs(want)));
        EXPECT_LT(sl.error[i], 1e-9);
    }
    EXPECT_LT(sl.cr_residual, 1e-5);
    IndexSet E(3.0, {entry(0, 0, 0)});
    auto one = [](const IndexEntry&, double) { return cplx(1.0); };
    EXPECT_LT(std::abs(mellin_exact_phg(E, one, 0, {0.2, 0.5}) - 1.0 / (cplx(0, 1) * (cplx(0) - cplx(0.2, 0.5)))), 1e-15);
}

TEST(Asympt, MellinLinearityAndZero) {
    auto f = phg_function({{{0, -1}, 1, 1.0}});
    auto g = phg_function({{{0.7, 0}, 0, {0, 1}}});
    auto sig = probe_sigmas();
    auto a = mellin(f, sig), b = mellin(g, sig);
    auto ab = mellin([&](double r) { return 2.0 * f(r) - cplx(0, 3) * g(r); }, sig);
    for (size_t i = 0; i < sig.size(); ++i)
        EXPECT_LT(std::abs(ab.values[i] - (2.0 * a.values[i] - cplx(0, 3) * b.values[i])), 1e-12);
    auto z = mellin([](double) { return cplx(0); }, sig);
    for (auto v : z.values) EXPECT_EQ(v, cplx(0));
    EXPECT_TRUE(locate_poles({z}).poles.empty());
}

TEST(Asympt, MellinDivergenceFlagged) {
    // rho^{-1} is not integrable against rho^{-i sigma - 1} for Im sigma < 1
    auto sl = mellin([](double r) { return cplx(1.0 / r); }, {cplx(0, 0.5)}, {.x_cap = 60});
    EXPECT_TRUE(sl.divergent);
    EXPECT_THROW(locate_poles({sl}), std::invalid_argument);
}

TEST(Asympt, SmoothCutoffKeepsPoles) {
    std::vector<Term> ts = {{{0, -1}, 1, 1.0}};
    MellinOptions o;
    o.smooth_cutoff = true;
    o.rho_max = 0.5;
    auto rep = locate_poles({mellin(phg_function(ts), probe_sigmas(), o)});
    ASSERT_EQ(rep.poles.size(), 1u);
    EXPECT_LT(std::abs(rep.poles[0].z - cplx(0, -1)), 1e-6);
    EXPECT_EQ(rep.poles[0].order, 2);
}

TEST(Asympt, SimpleDoubleTriplePoles) {
    for (int k = 0; k <= 2; ++k) {
        std::vector<Term> ts = {{{0.3, -0.7}, k, 1.0}};
        auto rep = locate_poles({mellin(phg_function(ts), probe_sigmas())});
        ASSERT_EQ(rep.poles.size(), 1u) << "k=" << k;
        EXPECT_LT(std::abs(rep.poles[0].z - cplx(0.3, -0.7)), 1e-6);
        EXPECT_EQ(rep.poles[0].order, k + 1);
        EXPECT_GT(rep.poles[0].confidence, 3);
        EXPECT_FALSE(rep.ill_conditioned);
    }
}

// random finite phg sums: poles at the exponents, order = highest log power + 1
TEST(AsymptProperty, MellinPolesRecoverRandomIndexSets) {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> re(-3, 3), im(-1.5, 0), amp(0.5, 2), ph(0, 2 * pi);
    std::uniform_int_distribution<int> nk(0, 2), nz(1, 5);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Term> ts;
        const int count = nz(rng);
        while (static_cast<int>(ts.size()) < count) {
            cplx z(re(rng), im(rng));
            bool ok = true;
            for (const auto& t : ts) ok = ok && std::abs(t.z - z) >= 0.3;
            if (ok) ts.push_back({z, nk(rng), std::polar(amp(rng), ph(rng))});
        }
        auto rep = locate_poles({mellin(phg_function(ts), probe_sigmas())});
        ASSERT_EQ(rep.poles.size(), ts.size()) << "trial " << trial;
        for (const auto& t : ts) {
            auto it = std::min_element(rep.poles.begin(), rep.poles.end(),
                                       [&](const Pole& a, const Pole& b) { return std::abs(a.z - t.z) < std::abs(b.z - t.z); });
            EXPECT_LT(std::abs(it->z - t.z), 1e-6) << "trial " << trial;
            EXPECT_EQ(it->order, t.k + 1) << "trial " << trial;
        }
    }
}

// u = a0(v) + a1(v) rho + a2 rho^2 sampled at fixed logified v_bar on the cutoff plateau
namespace {
struct Pushforward {
    double m = 0.3, vb = 0.05;
    CutoffSpec chi;
    double operator()(double rho) const {
        double v = unlogify_point(rho, vb, m, chi).v;
        double a0 = 1 + 2 * v - v * v + 0.5 * v * v * v, a1 = 0.7 - v + 3 * v * v;
        return a0 + a1 * rho + 0.4 * rho * rho;
    }
};
}  // namespace

TEST(AsymptProperty, LogificationDetectedByRefit) {
    const double A = 2.5;
    auto d = detect_phg_entries(Pushforward{}, A);
    auto predicted = logify_indexset(smooth_index_set(A));
    EXPECT_TRUE(d.entries.subset_of(predicted)) << d.entries.to_text();
    EXPECT_EQ(d.entries.closure(), predicted) << d.entries.to_text();
    EXPECT_LT(d.residual, 1e-12);
    // m = 0 leaves the smooth structure alone
    Pushforward flat;
    flat.m = 0;
    EXPECT_EQ(detect_phg_entries(flat, A).entries.closure(), smooth_index_set(A));
}

TEST(AsymptProperty, LogificationDetectedByMellinPoles) {
    const double A = 1.5;
    MellinOptions o;
    o.rho_max = 0.1;
    Pushforward u;
    auto rep = locate_poles({mellin([&](double r) { return cplx(u(r)); }, probe_sigmas(), o)}, {.depth = A});
    auto E = poles_to_indexset(rep, A);
    EXPECT_EQ(E, IndexSet(A, logify_indexset(smooth_index_set(A)).tops())) << E.to_text();
}

TEST(Asympt, FrontFaceFitExact) {
    std::vector<NullSlice> sl;
    for (int i = 0; i < 5; ++i) {
        NullSlice n;
        n.s = i;
        for (int k = 0; k < 40; ++k) {
            double r = 3e-5 * std::pow(2.0, -k / 6.0), L = std::log(r);
            n.rho.push_back(r);
            n.w.push_back(3 + i + 0.5 * r - 2 * r * L + (1 + i) * r * L * L + 7 * r * r);
        }
        sl.push_back(n);
    }
    auto fit = fit_front_face(sl);
    for (int i = 0; i < 5; ++i) {
        EXPECT_NEAR(fit.w0[i], 3 + i, 1e-9);
        EXPECT_NEAR(fit.w10[i], 0.5, 1e-5);
        EXPECT_NEAR(fit.w11[i], -2, 1e-6);
        EXPECT_NEAR(fit.w12[i], 1 + i, 1e-7);
        EXPECT_LT(fit.residual[i], 1e-12);
        EXPECT_FALSE(fit.flagged[i]);
    }
    NullSlice few{0, {1e-5, 2e-5}, {1, 1}};
    EXPECT_THROW(fit_slice(few), std::invalid_argument);
    NullSlice narrow;
    for (int k = 0; k < 10; ++k) {
        narrow.rho.push_back(1e-5 * (1 + 0.1 * k));
        narrow.w.push_back(1);
    }
    EXPECT_THROW(fit_slice(narrow), std::invalid_argument);
}

TEST(Asympt, LogCoefficientIdentity) {
    NormalFormConstants k{1, 2, 4, 0.2};
    const double factor = -0.25 * 0.04 * (1 - 4 + 4);
    ExpansionFit fit;
    for (int i = 0; i <= 200; ++i) {
        double s = -5 + 0.05 * i;
        fit.s.push_back(s);
        fit.w0.push_back(std::exp(-s * s / 4));
        fit.w12.push_back(factor * (-s / 2) * std::exp(-s * s / 4));
        fit.w10.push_back(0);
        fit.w11.push_back(0);
        fit.residual.push_back(0);
        fit.cond.push_back(1);
        fit.flagged.push_back(false);
    }
    auto rep = verify_log_coefficient(fit, k);
    EXPECT_LT(rep.max_rel_residual, 1e-5);
    EXPECT_LT(rep.integrated_residual, 1e-4);
    EXPECT_GT(rep.excluded, 0);
    auto flipped = verify_log_coefficient(fit, k, 0.1, +1);
    EXPECT_NEAR(flipped.max_rel_residual, 2, 1e-5);
    // m = 0: the target vanishes and the residual is |w12|
    auto zero = verify_log_coefficient(fit, {1, 2, 4, 0});
    EXPECT_NEAR(zero.max_rel_residual, std::fabs(factor) * 0.43, 0.01 * std::fabs(factor));
    // polynomial pair: the 4th-order differences are exact
    ExpansionFit poly = fit;
    for (size_t i = 0; i < poly.s.size(); ++i) {
        double x = poly.s[i];
        poly.w0[i] = 0.1 * x * x * x * x - x;
        poly.w12[i] = factor * (0.4 * x * x * x - 1);
    }
    auto exact = verify_log_coefficient(poly, k);
    EXPECT_LE(exact.max_rel_residual, 1e-10);
    EXPECT_LE(exact.integrated_residual, 1e-10);
    auto csv = fit_csv(fit, &rep);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "s,w0,w1_0,w1_1,w1_2,residual,cond,target_w1_2,rel_residual");
}

TEST(Asympt, Derivative4Exactness) {
    std::vector<double> f;
    for (int i = 0; i < 9; ++i) f.push_back(std::pow(0.1 * i, 4) - 0.1 * i);
    auto d = derivative4(f, 0.1);
    for (int i = 0; i < 9; ++i) EXPECT_NEAR(d[i], 4 * std::pow(0.1 * i, 3) - 1, 1e-10);
    EXPECT_THROW(uniform_step({0, 1, 2, 4, 5}), std::invalid_argument);
}

TEST(Asympt, TailDecay) {
    std::vector<double> s, w, wl, wc;
    for (int i = 0; i < 60; ++i) {
        double x = 5 * std::pow(40.0, i / 59.0);
        s.push_back(x);
        w.push_back(3 * std::pow(x, -2));
        wl.push_back(std::pow(x, -2) * std::log(x));
        wc.push_back(std::pow(x, -1.5) * std::cos(2 * std::log(x) + 0.3));
    }
    auto a = fit_tail_decay(s, w);
    EXPECT_NEAR(a.p.real(), -2, 1e-6);
    EXPECT_EQ(a.p.imag(), 0);
    EXPECT_EQ(a.kappa, 0);
    EXPECT_TRUE(a.stable);
    auto b = fit_tail_decay(s, wl);
    EXPECT_NEAR(b.p.real(), -2, 1e-6);
    EXPECT_EQ(b.kappa, 1);
    auto c = fit_tail_decay(s, wc);
    EXPECT_NEAR(c.p.real(), -1.5, 1e-5);
    EXPECT_NEAR(std::fabs(c.p.imag()), 2, 1e-5);
}
