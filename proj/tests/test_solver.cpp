#include <gtest/gtest.h>

#include <lrs/solver.hpp>

#include <random>

using namespace lrs;

namespace {

// leapfrog energy between levels n and n+1 (conserved by the scheme away from the source and the window edge)
double staggered_energy(const SolutionGrid& sol, const RadialReduction& red, const TimeLevel& a, const TimeLevel& b) {
    const double D = sol.dr;
    auto val = [](const TimeLevel& l, long j) {
        long i = j - l.j_left;
        return (i >= 0 && i < static_cast<long>(l.psi.size())) ? l.psi[i] : 0.0;
    };
    long lo = std::max(a.j_left, b.j_left), hi = std::max(a.j_left + long(a.psi.size()), b.j_left + long(b.psi.size()));
    double e = 0;
    for (long j = lo; j < hi; ++j) {
        double V = red.at_rstar(sol.rstar(j)).V;
        double dt = (val(b, j) - val(a, j)) / D;
        double dx = (val(b, j + 1) - val(b, j)) * (val(a, j + 1) - val(a, j)) / (D * D);
        e += 0.5 * D * (dt * dt + dx + 0.5 * V * (val(a, j) * val(a, j) + val(b, j) * val(b, j)));
    }
    return e;
}

}  // namespace

TEST(Solver, PotentialExample) {
    EXPECT_NEAR(reduce_radial(1).potential(4), 1.0 / 64, 1e-15);
    EXPECT_EQ(reduce_radial(0).potential(3), 0.0);
    EXPECT_THROW(reduce_radial(1).potential(2), std::domain_error);
    EXPECT_THROW(reduce_radial(1).tortoise(1.5), std::domain_error);
    EXPECT_THROW(reduce_radial(-1), std::invalid_argument);
}

TEST(Solver, TortoiseRoundTrip) {
    for (double M : {0.05, 1.0, 7.0}) {
        auto red = reduce_radial(M);
        for (int i = 0; i <= 400; ++i) {
            double r = 3 * M * std::pow(1e4 / 3, i / 400.0);
            EXPECT_NEAR(red.radius(red.tortoise(r)), r, 1e-10 * r) << M << " " << r;
        }
    }
    // deep inside the tortoise range r rounds to 2M but lapse and V stay accurate
    auto p = reduce_radial(0.05).at_rstar(-60);
    EXPECT_GT(p.lapse, 0);
    EXPECT_LT(p.lapse, 1e-12);
    EXPECT_GT(p.V, 0);
    auto z = reduce_radial(0).at_rstar(2.5);
    EXPECT_EQ(z.r, 2.5);
    EXPECT_EQ(z.lapse, 1.0);
    EXPECT_EQ(z.V, 0.0);
}

TEST(Solver, ZeroSourceGivesZero) {
    SourceSpec src;
    src.amplitude = 0;
    GridSpec g;
    g.dr = 0.1;
    for (double M : {0.0, 0.5}) {
        auto sol = solve_forward(reduce_radial(M), src, g, {20, 80});
        for (const auto& l : sol.levels)
            for (double v : l.psi) ASSERT_EQ(v, 0.0);
    }
}

TEST(Solver, SetupValidation) {
    SourceSpec src;
    GridSpec g;
    g.cfl = 1.2;
    EXPECT_THROW(solve_forward(reduce_radial(0), src, g, {10}), std::invalid_argument);
    g.cfl = 1;
    g.t_start = 0;  // source already on
    EXPECT_THROW(solve_forward(reduce_radial(0), src, g, {10}), std::invalid_argument);
    g = GridSpec{};
    src.r0 = 1.5;  // support reaches r < 0
    EXPECT_THROW(solve_forward(reduce_radial(0), src, g, {10}), std::invalid_argument);
    src = SourceSpec{};
    g.blowup_bound = 1e-6;
    g.check_every = 10;
    EXPECT_THROW(solve_forward(reduce_radial(0), src, g, {30}), std::runtime_error);
}

TEST(Solver, OracleSelfConsistency) {
    SourceSpec src;
    MinkowskiOracle o(src);
    using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
    // direct Duhamel integral over the backward characteristic triangle, odd reflection through r = 0
    auto direct = [&](double t, double r) {
        auto inner = [&](double tp) {
            double T = t - tp, lo = std::fabs(r - T), hi = r + T;
            auto f = [&](double rp) { return rp * src.radial(rp); };
            double a = std::max(lo, src.r_begin()), b = std::min(hi, src.r_end());
            return b > a ? GK::integrate(f, a, b, 15, 1e-13) : 0.0;
        };
        double a = src.t_begin(), b = std::min(src.t_end(), t);
        std::vector<double> cuts = {a, b};
        for (double e : {src.r_begin(), src.r_end()})
            for (double c : {t + r - e, t - r - e, t - r + e, t + r + e})
                if (c > a && c < b) cuts.push_back(c);
        std::sort(cuts.begin(), cuts.end());
        double s = 0;
        for (size_t i = 0; i + 1 < cuts.size(); ++i)
            s += GK::integrate([&](double tp) { return src.g(tp) * inner(tp); }, cuts[i], cuts[i + 1], 15, 1e-13);
        return 0.5 * s;
    };
    double scale = 0;
    std::vector<std::pair<double, double>> pts = {{3, 9}, {8, 4}, {12, 10}, {20, 2}, {30, 25}, {30, 17}, {6, 0.5}};
    for (auto [t, r] : pts) scale = std::max(scale, std::fabs(direct(t, r)));
    for (auto [t, r] : pts) EXPECT_NEAR(o.psi(t, r), direct(t, r), 1e-8 * scale) << t << " " << r;
    EXPECT_EQ(o.psi(-4.5, 10), 0.0);
}

TEST(Solver, MinkowskiConvergence) {
    auto rep = minkowski_convergence(SourceSpec{}, GridSpec{}, {0.2, 0.1, 0.05}, 30);
    ASSERT_EQ(rep.orders.size(), 2u);
    for (double p : rep.orders) EXPECT_GE(p, 1.9);
    EXPECT_LT(rep.errors.back(), rep.errors.front());
}

TEST(Solver, FinitePropagation) {
    SourceSpec src;
    GridSpec g;
    g.dr = 0.1;
    for (double M : {0.0, 0.5}) {
        auto red = reduce_radial(M);
        double t = 25;
        auto sol = solve_forward(red, src, g, {t});
        const auto& lv = sol.level_at(t);
        double edge = red.tortoise(src.r_end()) + (t - src.t_begin());
        double lo = M > 0 ? red.tortoise(src.r_begin()) - (t - src.t_begin()) : -1e300;
        double outside = 0, inside = 0;
        for (size_t i = 0; i < lv.psi.size(); ++i) {
            double rs = sol.rstar(lv.j_left + long(i));
            if (rs > edge + 1e-9 || rs < lo - 1e-9)
                outside = std::max(outside, std::fabs(lv.psi[i]));
            else
                inside = std::max(inside, std::fabs(lv.psi[i]));
        }
        EXPECT_LE(outside, 1e-12) << M;
        EXPECT_GT(inside, 1e-3) << M;
    }
}

TEST(Solver, EnergyNonincreasingAfterSwitchOff) {
    SourceSpec src;
    GridSpec g;
    g.dr = 0.1;
    for (double M : {0.0, 0.5}) {
        auto red = reduce_radial(M);
        std::vector<double> times;
        for (double t = 20; t <= 160; t += 10) {
            times.push_back(t);
            times.push_back(t + g.dr);
        }
        auto sol = solve_forward(red, src, g, times);
        ASSERT_EQ(sol.levels.size(), times.size());
        double prev = std::numeric_limits<double>::infinity(), first = 0;
        for (size_t k = 0; k + 1 < sol.levels.size(); k += 2) {
            double e = staggered_energy(sol, red, sol.levels[k], sol.levels[k + 1]);
            if (k == 0) first = e;
            EXPECT_LE(e, prev + 1e-12 * first) << M << " t=" << sol.levels[k].t;
            prev = e;
        }
        EXPECT_GT(first, 0);
    }
}

TEST(Solver, MinkowskiSlicesRhoIndependent) {
    SourceSpec src;
    GridSpec g;
    g.dr = 0.05;
    RhoSchedule sched{1e-2, 1e-3, 4};
    auto sol = solve_forward(reduce_radial(0), src, g, sched.times());
    auto slices = extract_null_slices(sol, s_grid(-20, 60, 0.5), sched.times(), ExtractionChart::tortoise);
    double scale = 0, spread = 0;
    for (const auto& sl : slices) {
        auto [lo, hi] = std::minmax_element(sl.w.begin(), sl.w.end());
        scale = std::max(scale, std::max(std::fabs(*lo), std::fabs(*hi)));
        spread = std::max(spread, *hi - *lo);
    }
    EXPECT_GT(scale, 0.1);
    EXPECT_LE(spread, 1e-6 * scale);
}

TEST(Solver, NormalFormSlicesMatchOracle) {
    SourceSpec src;
    GridSpec g;
    g.dr = 0.05;
    RhoSchedule sched{1e-2, 2.5e-3, 2};
    auto sol = solve_forward(reduce_radial(0), src, g, sched.times());
    auto slices = extract_null_slices(sol, {0.0, 20.0, 30.0}, sched.times());
    MinkowskiOracle o(src, g.t_start);
    for (const auto& sl : slices)
        for (size_t k = 0; k < sl.rho.size(); ++k) {
            double t = 1 / sl.rho[k];
            double v = sl.s * sl.rho[k], v0 = 2 * v / (1 + std::sqrt(1 - v)), r = t * (1 - v0 / 2);
            EXPECT_NEAR(sl.w[k], t * o.u(t, r), 4e-3) << sl.s << " " << t;
        }
}

TEST(Solver, ExtractionOutsideDomainThrows) {
    GridSpec g;
    g.dr = 0.1;
    auto sol = solve_forward(reduce_radial(0), SourceSpec{}, g, {100});
    EXPECT_THROW(extract_null_slices(sol, {150.0}, {100}), std::out_of_range);   // beyond the retarded window
    EXPECT_THROW(extract_null_slices(sol, {-60.0}, {100}), std::out_of_range);   // ahead of the right edge
    EXPECT_THROW(extract_null_slices(sol, {0.0}, {50}), std::out_of_range);      // level not stored
    EXPECT_NO_THROW(extract_null_slices(sol, {10.0}, {100}));
}

TEST(Solver, CheckpointRoundTrip) {
    GridSpec g;
    g.dr = 0.2;
    auto sol = solve_forward(reduce_radial(0.5), SourceSpec{}, g, {30, 60});
    auto dir = std::filesystem::temp_directory_path() / "lrs_ckpt_test";
    std::filesystem::create_directories(dir);
    write_checkpoint(sol, dir / "sol", "run-1");
    auto back = read_checkpoint(dir / "sol");
    EXPECT_EQ(back.label, sol.label);
    EXPECT_EQ(back.M, sol.M);
    ASSERT_EQ(back.levels.size(), sol.levels.size());
    for (size_t k = 0; k < sol.levels.size(); ++k) {
        EXPECT_EQ(back.levels[k].j_left, sol.levels[k].j_left);
        EXPECT_EQ(back.levels[k].psi, sol.levels[k].psi);
    }
    std::filesystem::remove_all(dir);
}

TEST(Solver, RunsAreDeterministic) {
    GridSpec g;
    g.dr = 0.1;
    auto a = solve_forward(reduce_radial(0.25), SourceSpec{}, g, {70});
    auto b = solve_forward(reduce_radial(0.25), SourceSpec{}, g, {70});
    EXPECT_EQ(a.levels[0].psi, b.levels[0].psi);
    auto sa = slices_csv(extract_null_slices(a, {0, 5}, {70}), ExtractionChart::normal_form);
    auto sb = slices_csv(extract_null_slices(b, {0, 5}, {70}), ExtractionChart::normal_form);
    EXPECT_EQ(sa, sb);
    EXPECT_NE(sa.find("chart=normal-form"), std::string::npos);
}

TEST(Solver, RhoScheduleSpacing) {
    RhoSchedule s;
    auto v = s.values();
    EXPECT_EQ(v.size(), 31u);  // 5 octaves at 6 per octave
    EXPECT_DOUBLE_EQ(v.front(), 3.2e-5);
    EXPECT_NEAR(v.back(), 1e-6, 1e-18);
}
