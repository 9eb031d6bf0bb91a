#include <lrs/indexsets.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace lrs;

namespace {

IndexSet closed(double A, std::vector<IndexEntry> es) { return IndexSet(A, std::move(es)).closure(); }

IndexSet random_closed(std::mt19937& g, double A) {
    std::uniform_int_distribution<int> nre(-2, 2), nim(0, 3), nk(0, 2), count(1, 3);
    IndexSet s(A);
    int c = count(g);
    for (int i = 0; i < c; ++i) s.insert(entry(Rational(nre(g), 2), Rational(-nim(g), 2), nk(g)));
    return s.closure();
}

bool supports_disjoint(const IndexSet& a, const IndexSet& b) {
    for (const auto& x : a.entries())
        for (const auto& y : b.entries())
            if (same(x.z, y.z)) return false;
    return true;
}

}  // namespace

TEST(IndexSets, ExtendedUnionDisjointIsPlainUnion) {
    auto E = closed(1.5, {entry(0, 0, 0)});
    auto F = closed(1.5, {entry(Rational(1, 2), 0, 0)});
    EXPECT_EQ(extended_union(E, F), plain_union(E, F));
    EXPECT_EQ(extended_union(E, F).size(), 4u);
}

TEST(IndexSets, ExtendedUnionCollisionRaisesLog) {
    auto E = closed(2.5, {entry(0, 0, 0)});
    auto U = extended_union(E, E);
    EXPECT_TRUE(U.contains(Exponent(0, 0), 1));
    EXPECT_TRUE(U.contains(Exponent(0, -1), 1));
    EXPECT_TRUE(U.contains(Exponent(0, -2), 1));
    EXPECT_EQ(U.max_log(Exponent(0, 0)), 1);
    EXPECT_EQ(U.size(), 6u);
}

TEST(IndexSets, ExtendedUnionMaxLogAddsPlusOne) {
    auto E = closed(1.5, {entry(0, 0, 1)});
    auto F = closed(1.5, {entry(0, 0, 0)});
    EXPECT_EQ(extended_union(E, F).max_log(Exponent(0, 0)), 2);
}

TEST(IndexSets, ExtendedUnionRejectsDepthMismatch) {
    EXPECT_THROW(extended_union(IndexSet(1.0), IndexSet(2.0)), std::invalid_argument);
}

TEST(IndexSets, ShiftS) {
    auto S1 = shift_S(closed(3.5, {entry(0, 0, 0)}));
    EXPECT_TRUE(S1.contains(Exponent(0, -1), 1));
    EXPECT_TRUE(S1.contains(Exponent(0, -1), 0));
    EXPECT_FALSE(S1.contains(Exponent(0, 0), 0));
    EXPECT_TRUE(shift_S(IndexSet(2.0)).empty());
    auto S2 = shift_S(shift_S(IndexSet(3.5, {entry(0, 0, 0)})));
    EXPECT_EQ(S2.tops().front().k, 2);
    EXPECT_TRUE(same(S2.tops().front().z, Exponent(0, -2)));
}

TEST(IndexSets, LogifySmoothIsCIlog) {
    for (double A : {1.5, 3.0, 4.5, 7.0}) {
        auto L = logify_indexset(smooth_index_set(A));
        IndexSet expect(A);
        for (int k = 0; k < A; ++k)
            for (int j = 0; j <= k; ++j) expect.insert(entry(0, -k, j));
        EXPECT_EQ(L, expect) << "A=" << A;
    }
}

TEST(IndexSets, LogifyNonIntegerExponent) {
    Exponent s0(Rational(1, 2), Rational(-3, 10));
    auto L = logify_indexset(IndexSet(2.5, {{s0, 0}}));
    IndexSet expect(2.5);
    for (int j = 0; j <= 2; ++j)
        for (int l = 0; l <= j; ++l) expect.insert({s0.shifted(j), l});
    EXPECT_EQ(L, expect);
    EXPECT_TRUE(logify_indexset(IndexSet(2.0)).empty());
}

TEST(IndexSets, ResonanceSetsWorkedExamples) {
    auto R = resonance_sets({entry(0, -1, 0)}, false, 3.5);
    EXPECT_EQ(R.E_res0, IndexSet(3.5, {entry(0, -1, 0), entry(0, -2, 0), entry(0, -3, 0)}));
    auto Rm = resonance_sets({entry(0, -1, 0)}, true, 3.5);
    IndexSet expect(3.5);
    for (int n = 1; n <= 3; ++n)
        for (int l = 0; l <= n - 1; ++l) expect.insert(entry(0, -n, l));
    EXPECT_EQ(Rm.E_res, expect);
    IndexSet scri(3.5);
    for (int j = 0; j <= 3; ++j)
        for (int l = 0; l <= 2 * j; ++l) scri.insert(entry(0, -j, l));
    EXPECT_EQ(Rm.E_scri, scri);
    EXPECT_EQ(R.E_scri, smooth_index_set(3.5));
    auto R2 = resonance_sets({entry(0, -1, 0), entry(0, -2, 0)}, false, 3.5);
    EXPECT_TRUE(R2.E_res0.contains(Exponent(0, -2), 1));
}

TEST(IndexSets, TextRoundTrip) {
    IndexSet s(3.0, {entry(Rational(1, 2), Rational(-1, 4), 2), entry(0, 0, 0)});
    s.insert({Exponent::floating(0.123456789, -0.7), 1});
    auto back = IndexSet::from_text(s.to_text(), 3.0);
    EXPECT_EQ(back, s);
    EXPECT_THROW(IndexSet::from_text("1,2\n", 3.0), std::invalid_argument);
}

TEST(IndexSets, FloatingCollisionTolerance) {
    IndexSet a(2.0, {{Exponent::floating(0.3, -0.2), 0}});
    IndexSet b(2.0, {{Exponent::floating(0.3 + 1e-14, -0.2), 0}});
    EXPECT_EQ(extended_union(a.closure(), b.closure()).max_log(Exponent::floating(0.3, -0.2)), 1);
}

// randomized properties on closed sets over a half-integer lattice (collisions are common)
TEST(IndexSetsProperty, AlgebraOnRandomClosedSets) {
    std::mt19937 g(20240611);
    const double A = 3.5;
    for (int trial = 0; trial < 200; ++trial) {
        auto E = random_closed(g, A), F = random_closed(g, A), G = random_closed(g, A);
        auto EF = extended_union(E, F);
        EXPECT_EQ(EF, extended_union(F, E));
        EXPECT_EQ(extended_union(EF, G), extended_union(E, extended_union(F, G)));
        auto U = plain_union(E, F);
        EXPECT_TRUE(U.subset_of(EF));
        EXPECT_EQ(EF == U, supports_disjoint(E, F));
        EXPECT_TRUE(EF.is_closed());
        auto LE = logify_indexset(E), LEF = logify_indexset(plain_union(E, F));
        EXPECT_TRUE(LE.subset_of(LEF));
        EXPECT_TRUE(LE.is_closed());
        EXPECT_TRUE(shift_S(E).is_closed());
    }
}
