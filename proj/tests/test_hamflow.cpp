#include <lrs/hamflow.hpp>

#include <gtest/gtest.h>

using namespace lrs;

namespace {

MetricModel generic_long_range() {
    json j = {{"kind", "normal_form"}, {"n", 4}, {"m", 0.7}, {"alpha", 1.5}, {"beta", 3.0},
              {"mu", {0.2, -0.1}}, {"upsilon", {0.3, -0.4}}, {"h_inv", {{1.5, 0.2}, {0.2, 0.8}}},
              {"remainders", {{{"slot", "vy"}, {"i", 0}, {"coeff", 0.6}, {"rho_power", 1}},
                              {{"slot", "vy"}, {"i", 1}, {"coeff", -0.3}, {"rho_power", 1}},
                              {{"slot", "rr"}, {"coeff", 0.5}, {"rho_power", 1}}}}};
    return make_model(j);
}

void expect_radial_spectrum(const LinearizationReport& R, int n, bool jordan) {
    ASSERT_EQ(R.eigen.size(), 3u);
    const double expect[] = {-8, -4, 0};
    const int alg[] = {1, n + 1, n - 2};
    for (int i = 0; i < 3; ++i) {
        EXPECT_NEAR(R.eigen[i].value.real(), expect[i], 1e-8);
        EXPECT_NEAR(R.eigen[i].value.imag(), 0, 1e-8);
        EXPECT_EQ(R.eigen[i].algebraic, alg[i]);
    }
    EXPECT_EQ(R.eigen[0].geometric, 1);
    EXPECT_EQ(R.eigen[1].geometric, jordan ? n : n + 1);
    EXPECT_EQ(R.eigen[2].geometric, n - 2);
    EXPECT_EQ(R.jordan_block, jordan);
    EXPECT_LT(R.step_drift, 1e-6);
    for (const auto& c : R.covectors) EXPECT_TRUE(c.pass) << c.name << " residual " << c.worst;
}

}  // namespace

TEST(HamFlow, HamiltonVectorExamples) {
    auto mk = make_minkowski();
    Vec h = hamilton_vector(mk, {0, 0, {0, 0}, 0, 1, {0, 0}});
    EXPECT_DOUBLE_EQ(h(0), -4);
    EXPECT_DOUBLE_EQ(h(1), 0);
    Vec hs = hamilton_vector(make_kerr_exterior(1, 0), {0.01, 0, {1.2, 0.3}, 0, 1, {0, 0}});
    EXPECT_NEAR(hs(1), 0.32, 5e-3);
    for (const auto& mdl : {mk, make_kerr_exterior(1, 0.5), generic_long_range()}) {
        std::vector<double> y = mdl.sample_y({0.3, 0.6});
        Vec z = hamilton_vector(mdl, {0.05, 0.1, y, 0, 0, {0, 0}});
        EXPECT_EQ(z.cwiseAbs().maxCoeff(), 0.0);
    }
}

// symplectic pairing: H coefficients are the partials of lambda, checked against central differences
TEST(HamFlowProperty, HamiltonVectorMatchesFiniteDifferences) {
    for (const auto& mdl : {make_minkowski(), make_kerr_exterior(1, 0.7), generic_long_range()}) {
        for (int i = 0; i < 40; ++i) {
            auto u = kronecker_point(i, 8);
            CotangentPoint p{mdl.rho_max * (0.05 + 0.9 * u[0]), 0.6 * u[1] - 0.3, mdl.sample_y({u[2], u[3]}),
                             2 * u[4] - 1, 2 * u[5] - 1, {2 * u[6] - 1, 2 * u[7] - 1}};
            Vec h = hamilton_vector(mdl, p);
            auto fd = [&](auto set) {
                const double e = 1e-5;
                CotangentPoint a = p, b = p;
                set(a, e);
                set(b, -e);
                return (b_symbol(mdl, a) - b_symbol(mdl, b)) / (2 * e);
            };
            std::vector<double> want = {
                fd([](CotangentPoint& q, double e) { q.xi += e; }),
                fd([](CotangentPoint& q, double e) { q.gamma += e; }),
                fd([](CotangentPoint& q, double e) { q.eta[0] += e; }),
                fd([](CotangentPoint& q, double e) { q.eta[1] += e; }),
                -p.rho * fd([](CotangentPoint& q, double e) { q.rho += e; }),
                -fd([](CotangentPoint& q, double e) { q.v += e; }),
                -fd([](CotangentPoint& q, double e) { q.y[0] += e; }),
                -fd([](CotangentPoint& q, double e) { q.y[1] += e; }),
            };
            for (int c = 0; c < 8; ++c) EXPECT_NEAR(h(c), want[c], 1e-6 * std::max(1.0, std::fabs(want[c]))) << mdl.label << " c=" << c;
        }
    }
}

TEST(HamFlow, RadialDistance) {
    EXPECT_EQ(radial_distance({0, 0, {0, 0}, 0, 1, {0, 0}}), 0.0);
    EXPECT_DOUBLE_EQ(radial_distance({0.3, 0.4, {0, 0}, 0, 1, {0, 0}}), 0.5);
    EXPECT_EQ(radial_distance({0, 0, {0.7, 0.1}, 0, -3, {0, 0}}), 0.0);
    EXPECT_DOUBLE_EQ(radial_distance({0, 0, {0, 0}, 2, 4, {0, 0}}), 0.5);
    EXPECT_THROW(radial_distance({0, 0, {0, 0}, 1, 0, {0, 0}}), std::invalid_argument);
}

TEST(HamFlow, TraceMinkowskiNullDatumReachesRadialSet) {
    auto mk = make_minkowski();
    auto p = null_seed(mk, 3);
    TraceOptions o;
    o.tol = 1e-4;
    Termination got[2];
    for (int d : {1, -1}) {
        o.direction = d;
        auto bc = trace_bicharacteristic(mk, p, 60, o);
        got[d > 0 ? 0 : 1] = bc.reason;
        EXPECT_LE(bc.max_abs_lambda(), 10 * 1e-8);
        if (bc.reason == Termination::reached_radial_set) {
            const auto& q = bc.points.back();
            EXPECT_LT(radial_distance(q), 1e-4);
            EXPECT_GE(bc.chart_switches, 1);
        }
    }
    EXPECT_TRUE(got[0] == Termination::reached_radial_set || got[1] == Termination::reached_radial_set);
}

TEST(HamFlow, TraceEdgeCases) {
    auto mk = make_minkowski();
    auto p = null_seed(mk, 0);
    auto bc = trace_bicharacteristic(mk, p, 0.0);
    EXPECT_EQ(bc.points.size(), 1u);
    EXPECT_EQ(bc.reason, Termination::horizon_exhausted);
    CotangentPoint timelike{0.05, 0, {0, 0}, 1, 0, {0, 0}};
    EXPECT_NEAR(b_symbol(mk, timelike), 1.0, 1e-15);
    EXPECT_THROW(trace_bicharacteristic(mk, timelike, 10), std::invalid_argument);
    TraceOptions o;
    o.null_mode = false;
    auto tl = trace_bicharacteristic(mk, timelike, 1, o);
    EXPECT_NEAR(tl.lambda.front(), tl.lambda.back(), 1e-8);
}

TEST(HamFlow, LinearizationMinkowski) { expect_radial_spectrum(linearization(make_minkowski()), 4, false); }

TEST(HamFlow, LinearizationHigherDimensionalMinkowski) {
    expect_radial_spectrum(linearization(make_minkowski(6)), 6, false);
}

TEST(HamFlow, LinearizationSchwarzschildJordanBlock) {
    auto R = linearization(make_kerr_exterior(1, 0));
    expect_radial_spectrum(R, 4, true);
    // the chain couples xi_hat to rho with strength -4m
    EXPECT_NEAR(R.A(3, 0), -4 * 4.0, 1e-8);
    EXPECT_NEAR(R.A(0, 3), 0, 1e-8);
}

TEST(HamFlow, LinearizationGenericNormalFormCovectors) {
    auto mdl = generic_long_range();
    auto R = linearization(mdl);
    expect_radial_spectrum(R, 4, true);
    EXPECT_NEAR(R.c(0), 0.6, 1e-8);
    EXPECT_NEAR(R.c(1), -0.3, 1e-8);
    auto rk = linearization(make_kerr_exterior(0.5, 0.3));
    expect_radial_spectrum(rk, 4, true);
}

TEST(HamFlow, NontrappingMinkowski) {
    auto rep = check_nontrapping(make_minkowski(), 64, 60, 1e-3);
    EXPECT_EQ(rep.reached, 64);
    EXPECT_TRUE(rep.pass);
    for (const auto& o : rep.outcomes) EXPECT_LE(o.max_abs_lambda, 10 * 1e-3);
    auto none = check_nontrapping(make_minkowski(), 8, 0, 1e-3);
    EXPECT_EQ(none.unclassified, 8);
    EXPECT_FALSE(none.pass);
}

TEST(HamFlow, NontrappingSchwarzschildInChart) {
    auto rep = check_nontrapping(make_kerr_exterior(1, 0), 16, 60, 1e-3);
    EXPECT_EQ(rep.unclassified, 0);
    EXPECT_TRUE(rep.pass);
}
