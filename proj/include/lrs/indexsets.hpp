#pragma once

#include "common.hpp"

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>

namespace lrs {

struct Rational {
    std::int64_t p = 0, q = 1;

    Rational() = default;
    Rational(std::int64_t num, std::int64_t den = 1) : p(num), q(den) {
        require(q != 0, "zero denominator");
        if (q < 0) {
            p = -p;
            q = -q;
        }
        std::int64_t g = std::gcd(p < 0 ? -p : p, q);
        if (g > 1) {
            p /= g;
            q /= g;
        }
    }
    double value() const { return static_cast<double>(p) / static_cast<double>(q); }
    friend Rational operator+(Rational a, Rational b) { return {a.p * b.q + b.p * a.q, a.q * b.q}; }
    friend Rational operator-(Rational a, Rational b) { return {a.p * b.q - b.p * a.q, a.q * b.q}; }
    friend bool operator==(Rational a, Rational b) { return a.p == b.p && a.q == b.q; }
    friend bool operator<(Rational a, Rational b) { return a.p * b.q < b.p * a.q; }
};

// Complex exponent z of a term rho^{iz}; exact when built from rationals.
class Exponent {
public:
    static constexpr double tol = 1e-12;

    Exponent() = default;
    Exponent(Rational re, Rational im) : exact_(true), rre_(re), rim_(im), re_(re.value()), im_(im.value()) {}
    static Exponent floating(double re, double im) {
        Exponent z;
        z.exact_ = false;
        z.re_ = re;
        z.im_ = im;
        return z;
    }
    // Rationals are recovered from doubles only when they are small-denominator exact.
    static Exponent from_double(double re, double im) {
        auto rat = [](double x) -> std::optional<Rational> {
            for (std::int64_t q : {1, 2, 3, 4, 5, 6, 8, 10, 12, 16, 20, 100, 1000}) {
                double p = x * q;
                if (std::fabs(p - std::round(p)) < 1e-13 * std::max(1.0, std::fabs(p)) && std::fabs(p) < 1e15)
                    return Rational(static_cast<std::int64_t>(std::llround(p)), q);
            }
            return std::nullopt;
        };
        auto a = rat(re), b = rat(im);
        if (a && b) return Exponent(*a, *b);
        return floating(re, im);
    }

    bool exact() const { return exact_; }
    double re() const { return re_; }
    double im() const { return im_; }
    cplx value() const { return {re_, im_}; }

    Exponent shifted(int j) const {  // z - j i
        if (exact_) return Exponent(rre_, rim_ - Rational(j));
        return floating(re_, im_ - j);
    }

    friend bool same(const Exponent& a, const Exponent& b) {
        if (a.exact_ && b.exact_) return a.rre_ == b.rre_ && a.rim_ == b.rim_;
        return std::fabs(a.re_ - b.re_) <= tol && std::fabs(a.im_ - b.im_) <= tol;
    }
    // ordering: decreasing Im z, then increasing Re z
    friend bool before(const Exponent& a, const Exponent& b) {
        if (same(a, b)) return false;
        if (a.exact_ && b.exact_) {
            if (!(a.rim_ == b.rim_)) return b.rim_ < a.rim_;
            return a.rre_ < b.rre_;
        }
        if (std::fabs(a.im_ - b.im_) > tol) return a.im_ > b.im_;
        return a.re_ < b.re_;
    }
    // Im z > -A, with exact handling of boundary cases for rational data
    bool above(double A) const { return im_ > -A + (exact_ ? 0.0 : tol); }

private:
    bool exact_ = true;
    Rational rre_, rim_;
    double re_ = 0, im_ = 0;
};

struct IndexEntry {
    Exponent z;
    int k = 0;
};

inline IndexEntry entry(Rational re, Rational im, int k) { return {Exponent(re, im), k}; }

// Finite truncation {Im z > -A} of an index set. Entries are kept as given; operations return closures.
class IndexSet {
public:
    IndexSet() = default;
    explicit IndexSet(double A) : A_(A) { require(A > 0, "truncation depth A must be > 0"); }
    IndexSet(double A, std::vector<IndexEntry> es) : IndexSet(A) {
        for (const auto& e : es) insert(e);
    }

    double depth() const { return A_; }
    bool empty() const { return entries_.empty(); }
    size_t size() const { return entries_.size(); }
    const std::vector<IndexEntry>& entries() const { return entries_; }

    void insert(const IndexEntry& e) {
        require(e.k >= 0, "log power k must be >= 0");
        if (!e.z.above(A_)) return;
        auto it = std::lower_bound(entries_.begin(), entries_.end(), e, less);
        if (it != entries_.end() && same(it->z, e.z) && it->k == e.k) return;
        entries_.insert(it, e);
    }
    bool contains(const Exponent& z, int k) const {
        for (const auto& e : entries_)
            if (same(e.z, z) && e.k == k) return true;
        return false;
    }
    // largest log power present at z, or -1
    int max_log(const Exponent& z) const {
        int r = -1;
        for (const auto& e : entries_)
            if (same(e.z, z)) r = std::max(r, e.k);
        return r;
    }
    // distinct exponents with their maximal log power
    std::vector<IndexEntry> tops() const {
        std::vector<IndexEntry> r;
        for (const auto& e : entries_) {
            if (!r.empty() && same(r.back().z, e.z))
                r.back().k = std::max(r.back().k, e.k);
            else
                r.push_back(e);
        }
        return r;
    }

    IndexSet log_closure() const {
        IndexSet r(A_);
        for (const auto& e : entries_)
            for (int l = 0; l <= e.k; ++l) r.insert({e.z, l});
        return r;
    }
    // union of the downward-shifted log boxes below each top entry; closed after one pass
    IndexSet closure() const {
        IndexSet r(A_);
        for (const auto& t : tops())
            for (int j = 0; t.z.shifted(j).above(A_); ++j)
                for (int l = 0; l <= t.k; ++l) r.insert({t.z.shifted(j), l});
        return r;
    }
    bool is_closed() const { return *this == closure(); }

    friend bool operator==(const IndexSet& a, const IndexSet& b) {
        if (a.entries_.size() != b.entries_.size()) return false;
        for (size_t i = 0; i < a.entries_.size(); ++i)
            if (!same(a.entries_[i].z, b.entries_[i].z) || a.entries_[i].k != b.entries_[i].k) return false;
        return true;
    }
    bool subset_of(const IndexSet& o) const {
        for (const auto& e : entries_)
            if (!o.contains(e.z, e.k)) return false;
        return true;
    }

    std::string to_text() const {
        std::ostringstream os;
        os.precision(17);
        for (const auto& e : entries_) os << e.z.re() << "," << e.z.im() << "," << e.k << "\n";
        return os.str();
    }
    static IndexSet from_text(const std::string& text, double A) {
        IndexSet r(A);
        std::istringstream is(text);
        std::string line;
        int lineno = 0;
        while (std::getline(is, line)) {
            ++lineno;
            if (line.empty() || line[0] == '#') continue;
            std::replace(line.begin(), line.end(), ',', ' ');
            std::istringstream ls(line);
            double re, im;
            int k;
            if (!(ls >> re >> im >> k)) throw std::invalid_argument(cat("bad index-set line ", lineno, ": ", line));
            r.insert({Exponent::from_double(re, im), k});
        }
        return r;
    }

private:
    static bool less(const IndexEntry& a, const IndexEntry& b) {
        if (same(a.z, b.z)) return a.k < b.k;
        return before(a.z, b.z);
    }
    double A_ = 1;
    std::vector<IndexEntry> entries_;
};

inline IndexSet smooth_index_set(double A) {
    IndexSet r(A);
    for (int j = 0; j < A; ++j) r.insert(entry(0, -j, 0));
    return r.closure();
}

// E ∪̄ F on stored entries, then closed
inline IndexSet extended_union(const IndexSet& E, const IndexSet& F) {
    require(E.depth() == F.depth(), cat("extended_union depth mismatch: ", E.depth(), " vs ", F.depth()));
    IndexSet r(E.depth());
    for (const auto& e : E.entries()) r.insert(e);
    for (const auto& f : F.entries()) r.insert(f);
    for (const auto& e : E.entries())
        for (const auto& f : F.entries())
            if (same(e.z, f.z)) r.insert({e.z, e.k + f.k + 1});
    return r.closure();
}

inline IndexSet plain_union(const IndexSet& E, const IndexSet& F) {
    require(E.depth() == F.depth(), "union depth mismatch");
    IndexSet r(E.depth());
    for (const auto& e : E.entries()) r.insert(e);
    for (const auto& f : F.entries()) r.insert(f);
    return r.closure();
}

inline IndexSet shift_S(const IndexSet& G) {
    IndexSet r(G.depth());
    for (const auto& e : G.entries()) r.insert({e.z.shifted(1), e.k + 1});
    return r.closure();
}

// E' = union_j {(z - j i, l) : (z, k) in E, l <= k + j}
inline IndexSet logify_indexset(const IndexSet& E) {
    IndexSet r(E.depth());
    for (const auto& e : E.entries())
        for (int j = 0; e.z.shifted(j).above(E.depth()); ++j)
            for (int l = 0; l <= e.k + j; ++l) r.insert({e.z.shifted(j), l});
    return r.closure();
}

// E_tot is the pair (E_res, E_scri): the index sets at C_+ and at null infinity
struct ResonanceSets {
    IndexSet E_res0, E_res, E_scri;
};

inline ResonanceSets resonance_sets(const std::vector<IndexEntry>& E0, bool m_nonzero, double A) {
    require(A > 0, "truncation depth A must be > 0");
    ResonanceSets R;
    // iterated extended union of raw shifts E_j, log closure only until the end
    IndexSet acc(A);
    for (const auto& e : E0) acc.insert(e);
    for (int j = 1; j < A + 1; ++j) {
        IndexSet Ej(A);
        for (const auto& e : E0) Ej.insert({e.z.shifted(j), e.k});
        if (Ej.empty()) continue;
        IndexSet next(A);
        for (const auto& a : acc.entries()) next.insert(a);
        for (const auto& b : Ej.entries()) next.insert(b);
        for (const auto& a : acc.entries())
            for (const auto& b : Ej.entries())
                if (same(a.z, b.z)) next.insert({a.z, a.k + b.k + 1});
        acc = next.log_closure();
    }
    R.E_res0 = acc.closure();
    if (m_nonzero) {
        IndexSet r(A);
        for (const auto& e : R.E_res0.entries())
            for (int j = 0; e.z.shifted(j).above(A); ++j)
                for (int l = 0; l <= j; ++l) r.insert({e.z.shifted(j), e.k + l});
        R.E_res = r.closure();
        IndexSet s(A);
        for (int j = 0; j < A; ++j)
            for (int l = 0; l <= 2 * j; ++l) s.insert(entry(0, -j, l));
        R.E_scri = s.closure();
    } else {
        R.E_res = R.E_res0;
        R.E_scri = smooth_index_set(A);
    }
    return R;
}

}  // namespace lrs
