#pragma once

#include "coords.hpp"
#include "geometry.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>
#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>

#include <limits>
#include <numeric>

namespace lrs {

// ---------- Mellin transform ----------

struct MellinOptions {
    double rho_max = 1.0;
    bool smooth_cutoff = false;  // sharp indicator of (0, rho_max] by default
    double panel = 1.0;          // panel width in x = -log rho
    double x_cap = 400;          // give up (divergent) beyond this
    double tail_tol = 1e-17;
    bool check_holomorphy = true;
    double cr_step = 1e-3;
};

struct MellinSlice {
    std::vector<cplx> sigma, values;
    std::vector<double> error;  // Kronrod - Gauss estimate per sigma
    double rho_max = 1;
    std::string cutoff;
    bool divergent = false;
    double x_end = 0;
    double cr_residual = 0;  // discrete Cauchy-Riemann mismatch, relative to max |values|
};

inline std::vector<cplx> sigma_lines(const std::vector<double>& ims, double re_min, double re_max, int count) {
    require(count >= 2 && re_max > re_min, "sigma_lines needs count >= 2 and re_max > re_min");
    std::vector<cplx> out;
    for (double im : ims)
        for (int i = 0; i < count; ++i) out.emplace_back(re_min + (re_max - re_min) * i / (count - 1), im);
    return out;
}

namespace detail {

struct KronrodRule {
    std::vector<double> x, wk, wg;  // nodes on [-1, 1], Kronrod weights, embedded Gauss weights
};

inline const KronrodRule& kronrod31() {
    static const KronrodRule rule = [] {
        using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
        using G = boost::math::quadrature::gauss<double, 15>;
        KronrodRule r;
        const auto& a = GK::abscissa();
        const auto& wk = GK::weights();
        const auto& wg = G::weights();
        r.x.push_back(0);
        r.wk.push_back(wk[0]);
        r.wg.push_back(wg[0]);
        for (size_t i = 1; i < a.size(); ++i) {
            double g = (i % 2 == 0) ? wg[i / 2] : 0.0;
            for (double sgn : {1.0, -1.0}) {
                r.x.push_back(sgn * a[i]);
                r.wk.push_back(wk[i]);
                r.wg.push_back(g);
            }
        }
        return r;
    }();
    return rule;
}

}  // namespace detail

// tilde f(sigma) = int_0^{rho_max} chi(rho) f(rho) (rho / rho_max)^{-i sigma} d rho / rho, computed in x = -log rho.
// Normalising by rho_max keeps the sharp-cutoff transform of a finite phg sum rational.
inline MellinSlice mellin(const std::function<cplx(double)>& f, const std::vector<cplx>& sigma,
                          const MellinOptions& opt = {}) {
    require(opt.rho_max > 0 && opt.panel > 0, "mellin needs rho_max > 0 and panel > 0");
    MellinSlice out;
    out.rho_max = opt.rho_max;
    out.cutoff = opt.smooth_cutoff ? "smooth" : "sharp";
    std::vector<cplx> sig = sigma;
    const size_t ns = sigma.size();
    if (opt.check_holomorphy)
        for (size_t i = 0; i < ns; ++i)
            for (cplx d : {cplx(opt.cr_step, 0), cplx(-opt.cr_step, 0), cplx(0, opt.cr_step), cplx(0, -opt.cr_step)})
                sig.push_back(sigma[i] + d);
    const size_t N = sig.size();
    std::vector<cplx> acc(N, 0.0);
    std::vector<double> err(N, 0.0);
    const auto& R = detail::kronrod31();
    const double x0 = -std::log(opt.rho_max);
    CutoffSpec chi(0.5 * opt.rho_max, opt.rho_max);
    int quiet = 0;
    double x = x0;
    std::vector<cplx> fv(R.x.size());
    std::vector<double> xs(R.x.size());
    while (true) {
        if (x - x0 > opt.x_cap) {
            out.divergent = true;
            break;
        }
        const double h = 0.5 * opt.panel, c = x + h;
        for (size_t q = 0; q < R.x.size(); ++q) {
            xs[q] = c + h * R.x[q];
            double rho = std::exp(-xs[q]);
            fv[q] = f(rho) * (opt.smooth_cutoff ? chi(rho) : 1.0);
        }
        double worst = 0;
        for (size_t j = 0; j < N; ++j) {
            cplx k = 0, g = 0;
            for (size_t q = 0; q < xs.size(); ++q) {
                cplx term = fv[q] * std::exp(cplx(0, 1) * sig[j] * (xs[q] - x0));
                k += R.wk[q] * term;
                g += R.wg[q] * term;
            }
            k *= h;
            g *= h;
            acc[j] += k;
            err[j] += std::abs(k - g);
            worst = std::max(worst, std::abs(k) / std::max(1.0, std::abs(acc[j])));
        }
        x += opt.panel;
        quiet = worst < opt.tail_tol ? quiet + 1 : 0;
        if (quiet >= 3) break;
    }
    out.x_end = x;
    out.sigma = sigma;
    out.values.assign(acc.begin(), acc.begin() + ns);
    out.error.assign(err.begin(), err.begin() + ns);
    if (opt.check_holomorphy) {
        double scale = 0, worst = 0;
        for (size_t i = 0; i < ns; ++i) scale = std::max(scale, std::abs(out.values[i]));
        for (size_t i = 0; i < ns; ++i) {
            const cplx* v = &acc[ns + 4 * i];
            cplx dx = (v[0] - v[1]) / (2 * opt.cr_step), dy = (v[2] - v[3]) / (2 * opt.cr_step);
            worst = std::max(worst, std::abs(dx - dy / cplx(0, 1)));
        }
        out.cr_residual = scale > 0 ? worst * opt.cr_step / scale : 0.0;
    }
    return out;
}

// Exact transform of a finite phg sum with the sharp cutoff at rho_max = 1.
inline cplx mellin_exact_phg(const IndexSet& E, const PhgCoefficient& a, double x, cplx sigma) {
    cplx sum = 0;
    for (const auto& e : E.entries()) {
        cplx c = a(e, x);
        if (c == cplx(0)) continue;
        double fact = std::tgamma(e.k + 1.0);
        sum += c * (e.k % 2 ? -1.0 : 1.0) * fact / std::pow(cplx(0, 1) * (e.z.value() - sigma), e.k + 1);
    }
    return sum;
}

// ---------- rational approximation and poles ----------

// Barycentric rational approximant from the AAA algorithm.
struct Barycentric {
    std::vector<cplx> support, fvals, weights;

    cplx operator()(cplx z) const {
        cplx n = 0, d = 0;
        for (size_t j = 0; j < support.size(); ++j) {
            cplx dz = z - support[j];
            if (dz == cplx(0)) return fvals[j];
            n += weights[j] * fvals[j] / dz;
            d += weights[j] / dz;
        }
        return n / d;
    }

    // zeros of the denominator, via shift-invert of the arrowhead pencil
    std::vector<cplx> poles() const {
        const int m = static_cast<int>(support.size());
        if (m < 2) return {};
        Eigen::MatrixXcd E = Eigen::MatrixXcd::Zero(m + 1, m + 1), B = Eigen::MatrixXcd::Zero(m + 1, m + 1);
        for (int j = 0; j < m; ++j) {
            E(0, j + 1) = weights[j];
            E(j + 1, 0) = 1;
            E(j + 1, j + 1) = support[j];
            B(j + 1, j + 1) = 1;
        }
        cplx mu = 0;
        for (auto s : support) mu += s;
        mu = mu / double(m) + cplx(0.1234, 0.5678);
        Eigen::FullPivLU<Eigen::MatrixXcd> lu(E - mu * B);
        Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(lu.solve(B), false);
        std::vector<cplx> out;
        double big = es.eigenvalues().cwiseAbs().maxCoeff();
        for (int i = 0; i < m + 1; ++i) {
            cplx th = es.eigenvalues()(i);
            if (std::abs(th) > 1e-13 * big) out.push_back(mu + 1.0 / th);
        }
        return out;
    }
};

struct AaaResult {
    Barycentric r;
    double max_error = 0, scale = 0;
};

inline AaaResult aaa(const std::vector<cplx>& Z, const std::vector<cplx>& F, double tol = 1e-13, int mmax = 80) {
    require(Z.size() == F.size() && !Z.empty(), "aaa needs matching nonempty samples");
    const int M = static_cast<int>(Z.size());
    AaaResult res;
    for (auto f : F) res.scale = std::max(res.scale, std::abs(f));
    std::vector<bool> used(M, false);
    std::vector<cplx> R(M);
    cplx mean = 0;
    for (auto f : F) mean += f;
    mean /= double(M);
    std::fill(R.begin(), R.end(), mean);
    Barycentric& b = res.r;
    for (int m = 1; m <= std::min(mmax, M - 1); ++m) {
        int jmax = 0;
        double emax = -1;
        for (int i = 0; i < M; ++i)
            if (!used[i] && std::abs(F[i] - R[i]) > emax) {
                emax = std::abs(F[i] - R[i]);
                jmax = i;
            }
        used[jmax] = true;
        b.support.push_back(Z[jmax]);
        b.fvals.push_back(F[jmax]);
        std::vector<int> rows;
        for (int i = 0; i < M; ++i)
            if (!used[i]) rows.push_back(i);
        Eigen::MatrixXcd C(rows.size(), m), A(rows.size(), m);
        for (size_t r = 0; r < rows.size(); ++r)
            for (int c = 0; c < m; ++c) {
                C(r, c) = 1.0 / (Z[rows[r]] - b.support[c]);
                A(r, c) = (F[rows[r]] - b.fvals[c]) * C(r, c);
            }
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(A, Eigen::ComputeFullV);
        Eigen::VectorXcd w = svd.matrixV().col(m - 1);
        b.weights.assign(w.data(), w.data() + m);
        double err = 0;
        for (size_t r = 0; r < rows.size(); ++r) {
            cplx n = 0, d = 0;
            for (int c = 0; c < m; ++c) {
                n += C(r, c) * w(c) * b.fvals[c];
                d += C(r, c) * w(c);
            }
            R[rows[r]] = n / d;
            err = std::max(err, std::abs(F[rows[r]] - R[rows[r]]));
        }
        for (int c = 0; c < m; ++c) R[std::find(Z.begin(), Z.end(), b.support[c]) - Z.begin()] = b.fvals[c];
        res.max_error = err;
        if (err <= tol * res.scale) break;
    }
    return res;
}

struct Pole {
    cplx z;
    int order = 0;
    double confidence = 0;     // log10 of leading Laurent coefficient over the noise floor
    std::vector<cplx> laurent;  // c_{-1}, c_{-2}, ...
    int aaa_roots = 0;          // AAA denominator roots merged into this pole
};

struct PoleOptions {
    double aaa_tol = 1e-13;
    double depth = 3.0;            // keep poles with Im z > -depth
    double re_bound = 1e3;         // and |Re z| below this
    double cluster_tol = 0.15;     // roots closer than this are one pole
    double radius = 0.5;           // largest contour radius for Laurent coefficients
    int max_order = 6;
    double order_threshold = 1e-6;  // relative to the leading coefficient
    double noise_floor = 1e-6;      // relative to max |transform| on the samples
    double fit_bound = 1e-8;        // relative fit error above this flags the fit
};

struct PoleReport {
    std::vector<Pole> poles;
    double fit_error = 0;
    int support_size = 0;
    bool ill_conditioned = false;
    bool structured = false;  // poles and orders from the confluent partial-fraction refit
    double model_residual = 0;
};

namespace detail {

// c_{-j} = (1/2 pi i) oint r(s) (s - z)^{j-1} ds over a circle of radius rad
inline std::vector<cplx> laurent_coefficients(const Barycentric& r, cplx z, double rad, int jmax) {
    const int K = 128;
    std::vector<cplx> c(jmax, 0.0);
    for (int q = 0; q < K; ++q) {
        cplx e = std::polar(1.0, 2 * pi * (q + 0.5) / K), d = rad * e, v = r(z + d);
        for (int j = 1; j <= jmax; ++j) c[j - 1] += v * std::pow(d, j);
    }
    for (auto& x : c) x /= double(K);
    return c;
}

inline int laurent_order(const std::vector<cplx>& c, double thr) {
    double lead = 0;
    for (auto x : c) lead = std::max(lead, std::abs(x));
    int k = 0;
    for (size_t j = 0; j < c.size(); ++j)
        if (std::abs(c[j]) > thr * lead) k = static_cast<int>(j) + 1;
    return k;
}

}  // namespace detail

namespace detail {

// Every cluster of AAA roots, refined on Laurent data of the approximant; no region filter.
inline std::vector<Pole> aaa_pole_candidates(const Barycentric& r, const PoleOptions& opt) {
    // A pole of order k shows up as k nearby roots; merge them by single linkage.
    auto roots = r.poles();
    std::vector<int> label(roots.size());
    std::iota(label.begin(), label.end(), 0);
    std::function<int(int)> find = [&](int i) { return label[i] == i ? i : label[i] = find(label[i]); };
    for (size_t i = 0; i < roots.size(); ++i)
        for (size_t j = i + 1; j < roots.size(); ++j)
            if (std::abs(roots[i] - roots[j]) < opt.cluster_tol) label[find(i)] = find(j);
    std::vector<cplx> centers;
    std::vector<double> spread;
    std::vector<int> count;
    for (size_t i = 0; i < roots.size(); ++i) {
        if (find(i) != static_cast<int>(i)) continue;
        cplx c = 0;
        int n = 0;
        for (size_t j = 0; j < roots.size(); ++j)
            if (find(j) == static_cast<int>(i)) {
                c += roots[j];
                ++n;
            }
        c /= double(n);
        double sp = 0;
        for (size_t j = 0; j < roots.size(); ++j)
            if (find(j) == static_cast<int>(i)) sp = std::max(sp, std::abs(roots[j] - c));
        centers.push_back(c);
        spread.push_back(sp);
        count.push_back(n);
    }
    std::vector<Pole> out;
    for (size_t gi = 0; gi < centers.size(); ++gi) {
        cplx z = centers[gi];
        // the contour must enclose the cluster and exclude every other one
        double rad = opt.radius;
        for (size_t o = 0; o < centers.size(); ++o)
            if (o != gi) rad = std::min(rad, 0.45 * std::abs(centers[o] - z));
        rad = std::max(rad, std::min(2 * spread[gi], opt.radius));
        // Newton on the Laurent data: off-centre by e, c_{-k-1} = k e c_{-k}
        for (int it = 0; it < 60; ++it) {
            auto c = laurent_coefficients(r, z, rad, opt.max_order + 1);
            int k = laurent_order(std::vector<cplx>(c.begin(), c.end() - 1), opt.order_threshold);
            if (k == 0 || std::abs(c[k - 1]) == 0) break;
            cplx dz = c[k] / (double(k) * c[k - 1]);
            if (std::abs(dz) > 0.25 * rad) dz *= 0.25 * rad / std::abs(dz);
            z += dz;
            if (std::abs(dz) < 1e-14 * std::max(1.0, std::abs(z))) break;
        }
        Pole p;
        p.z = z;
        p.laurent = laurent_coefficients(r, z, rad, opt.max_order);
        p.order = laurent_order(p.laurent, opt.order_threshold);
        p.aaa_roots = count[gi];
        if (p.order > 0) out.push_back(p);
    }
    return out;
}

struct PartialFractions {
    std::vector<cplx> z;
    std::vector<int> k;
    std::vector<std::vector<cplx>> c;  // c[j][l-1] multiplies (s - z_j)^{-l}
    double residual = INFINITY;        // relative to |F|
};

// linear least squares for the coefficients at fixed poles and orders
inline double fit_partial_fractions(const std::vector<cplx>& Z, const std::vector<cplx>& F, PartialFractions& pf,
                                    Eigen::VectorXcd* resid = nullptr) {
    const int M = static_cast<int>(Z.size());
    int nc = 0;
    for (int k : pf.k) nc += k;
    Eigen::VectorXcd y(M);
    if (nc == 0) {
        for (int i = 0; i < M; ++i) y(i) = F[i];
        pf.c.assign(pf.z.size(), {});
        if (resid) *resid = -y;
        pf.residual = 1;
        return pf.residual;
    }
    Eigen::MatrixXcd B(M, nc);
    for (int i = 0; i < M; ++i) {
        y(i) = F[i];
        int col = 0;
        for (size_t j = 0; j < pf.z.size(); ++j) {
            cplx b = 1.0 / (Z[i] - pf.z[j]), t = b;
            for (int l = 0; l < pf.k[j]; ++l, t *= b) B(i, col++) = t;
        }
    }
    Eigen::VectorXd sc = B.colwise().norm().transpose();
    for (int c = 0; c < nc; ++c)
        if (!(sc(c) > 0)) sc(c) = 1;
    Eigen::MatrixXcd Bs = B * sc.cwiseInverse().cast<cplx>().asDiagonal();
    Eigen::VectorXcd x = Bs.colPivHouseholderQr().solve(y);
    x = x.cwiseQuotient(sc.cast<cplx>());
    Eigen::VectorXcd r = B * x - y;
    pf.c.assign(pf.z.size(), {});
    int col = 0;
    for (size_t j = 0; j < pf.z.size(); ++j)
        for (int l = 0; l < pf.k[j]; ++l) pf.c[j].push_back(x(col++));
    if (resid) *resid = r;
    pf.residual = r.norm() / y.norm();
    return pf.residual;
}

struct PolishFunctor {
    using Scalar = double;
    enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };
    using InputType = Eigen::VectorXd;
    using ValueType = Eigen::VectorXd;
    using JacobianType = Eigen::MatrixXd;
    const std::vector<cplx>* Z;
    const std::vector<cplx>* F;
    std::vector<int> k;
    double scale;
    int inputs() const { return 2 * static_cast<int>(k.size()); }
    int values() const { return 2 * static_cast<int>(Z->size()); }
    int operator()(const Eigen::VectorXd& x, Eigen::VectorXd& fv) const {
        PartialFractions pf;
        for (size_t j = 0; j < k.size(); ++j) pf.z.emplace_back(x(2 * j), x(2 * j + 1));
        pf.k = k;
        Eigen::VectorXcd r;
        fit_partial_fractions(*Z, *F, pf, &r);
        for (int i = 0; i < r.size(); ++i) {
            fv(2 * i) = r(i).real() / scale;
            fv(2 * i + 1) = r(i).imag() / scale;
        }
        return 0;
    }
};

// variable projection: poles by Levenberg-Marquardt, coefficients by linear least squares
inline void polish_partial_fractions(const std::vector<cplx>& Z, const std::vector<cplx>& F, double scale,
                                     PartialFractions& pf) {
    if (pf.z.empty()) {
        fit_partial_fractions(Z, F, pf);
        return;
    }
    PolishFunctor fn{&Z, &F, pf.k, scale};
    Eigen::VectorXd x(2 * pf.z.size());
    for (size_t j = 0; j < pf.z.size(); ++j) {
        x(2 * j) = pf.z[j].real();
        x(2 * j + 1) = pf.z[j].imag();
    }
    Eigen::NumericalDiff<PolishFunctor, Eigen::Central> nd(fn);
    Eigen::LevenbergMarquardt<Eigen::NumericalDiff<PolishFunctor, Eigen::Central>> lm(nd);
    lm.parameters.xtol = 1e-15;
    lm.parameters.ftol = 1e-30;
    lm.parameters.maxfev = 4000;
    lm.minimize(x);
    for (size_t j = 0; j < pf.z.size(); ++j) pf.z[j] = {x(2 * j), x(2 * j + 1)};
    fit_partial_fractions(Z, F, pf);
}

inline double top_ratio(const std::vector<cplx>& c) {
    double lead = 0;
    for (auto x : c) lead = std::max(lead, std::abs(x));
    return lead > 0 ? std::abs(c.back()) / lead : 0.0;
}

}  // namespace detail

inline PoleReport locate_poles(const std::vector<MellinSlice>& slices, const PoleOptions& opt = {}) {
    std::vector<cplx> Z, F;
    for (const auto& sl : slices) {
        require(!sl.divergent, "locate_poles: a Mellin slice is flagged divergent");
        Z.insert(Z.end(), sl.sigma.begin(), sl.sigma.end());
        F.insert(F.end(), sl.values.begin(), sl.values.end());
    }
    require(!Z.empty(), "locate_poles needs samples");
    PoleReport rep;
    double scale = 0;
    for (auto f : F) scale = std::max(scale, std::abs(f));
    if (scale == 0) return rep;
    auto fit = aaa(Z, F, opt.aaa_tol);
    rep.fit_error = fit.max_error / scale;
    rep.support_size = static_cast<int>(fit.r.support.size());
    rep.ill_conditioned = rep.fit_error > opt.fit_bound;
    auto cand = detail::aaa_pole_candidates(fit.r, opt);
    auto in_region = [&](cplx z) { return z.imag() > -opt.depth && std::fabs(z.real()) <= opt.re_bound; };

    // Multiple poles split under noise, so the AAA locations of order-k poles are only good to
    // about eps^{1/k}. Refit a confluent partial-fraction model with explicit orders instead.
    // Orders start from the AAA root counts; then the fewest orders that reach the AAA accuracy.
    const double aaa_rel = rep.fit_error, target = std::max(100 * aaa_rel, 1e-13);
    detail::PartialFractions pf;
    for (const auto& c : cand) {
        pf.z.push_back(c.z);
        pf.k.push_back(std::min(c.aaa_roots, opt.max_order));
    }
    detail::polish_partial_fractions(Z, F, scale, pf);
    for (int round = 0; round < 4 * opt.max_order && pf.residual > target; ++round) {
        detail::PartialFractions best = pf;
        for (size_t j = 0; j < pf.z.size(); ++j) {
            if (pf.k[j] >= opt.max_order) continue;
            auto t = pf;
            ++t.k[j];
            detail::polish_partial_fractions(Z, F, scale, t);
            if (t.residual < best.residual) best = t;
        }
        if (!(best.residual < 0.5 * pf.residual)) break;
        pf = best;
    }
    // then lower orders the data does not need
    const double keep = std::max(target, pf.residual);
    for (bool changed = true; changed;) {
        changed = false;
        for (size_t j = 0; j < pf.z.size(); ++j) {
            if (pf.k[j] <= 1) continue;
            auto t = pf;
            --t.k[j];
            detail::polish_partial_fractions(Z, F, scale, t);
            if (t.residual <= keep) {
                pf = t;
                changed = true;
            }
        }
    }
    const bool polished = pf.residual <= target;
    std::vector<Pole> found;
    if (polished) {
        for (size_t j = 0; j < pf.z.size(); ++j) {
            Pole p;
            p.z = pf.z[j];
            p.laurent = pf.c[j];
            p.laurent.resize(opt.max_order, 0.0);
            p.order = detail::laurent_order(p.laurent, opt.order_threshold);
            found.push_back(p);
        }
    } else {
        found = cand;
    }
    for (auto& p : found) {
        if (!in_region(p.z) || p.order == 0) continue;
        double lead = std::abs(p.laurent[p.order - 1]);
        if (lead < opt.noise_floor * scale) continue;
        p.confidence = std::log10(lead / (opt.noise_floor * scale));
        rep.poles.push_back(p);
    }
    rep.structured = polished;
    rep.model_residual = polished ? pf.residual : aaa_rel;
    std::sort(rep.poles.begin(), rep.poles.end(), [](const Pole& a, const Pole& b) {
        if (std::fabs(a.z.imag() - b.z.imag()) > 1e-9) return a.z.imag() > b.z.imag();
        return a.z.real() < b.z.real();
    });
    return rep;
}

// Index-set entries read off the poles: a pole of order k at z contributes (z, k-1).
// Locations within snap of a multiple of 1/12 are taken as exact.
inline IndexSet poles_to_indexset(const PoleReport& rep, double A, double snap = 1e-5) {
    auto exact = [&](double x) -> std::optional<Rational> {
        double r = std::round(12 * x);
        if (std::fabs(12 * x - r) < 12 * snap) return Rational(static_cast<std::int64_t>(r), 12);
        return std::nullopt;
    };
    IndexSet E(A);
    for (const auto& p : rep.poles) {
        auto a = exact(p.z.real()), b = exact(p.z.imag());
        Exponent z = a && b ? Exponent(*a, *b) : Exponent::floating(p.z.real(), p.z.imag());
        E.insert({z, p.order - 1});
    }
    return E;
}

// Probe lines just above a strip whose top is Im sigma = top.
inline std::vector<cplx> default_probe_lines(double top = 0) {
    return sigma_lines({top + 0.25, top + 0.5, top + 1.0, top + 1.6}, -6, 6, 61);
}

// ---------- linear re-fit against integer-power phg terms ----------

struct PhgDetectOptions {
    int max_power = 3;  // rho^j, j <= max_power (powers at or below depth absorb the tail)
    int max_log = 3;
    double floor = 1e-6;  // relative to max |f| on the window
    double rho_min = 1e-6, rho_max = 0.5;
    int samples = 400;
};

struct PhgDetection {
    IndexSet entries;  // (-j i, l) with |coefficient| above the floor and j < depth
    Mat coefficients;  // (max_power + 1) x (max_log + 1)
    double residual = 0, cond = 0, scale = 0;
};

inline PhgDetection detect_phg_entries(const std::function<double(double)>& f, double A, const PhgDetectOptions& opt = {}) {
    require(opt.rho_min > 0 && opt.rho_max > opt.rho_min && opt.samples > 0, "bad rho window");
    const int J = opt.max_power + 1, K = opt.max_log + 1, nb = J * K;
    require(opt.samples >= 2 * nb, "too few samples for the basis");
    Mat X(opt.samples, nb);
    Vec y(opt.samples);
    for (int i = 0; i < opt.samples; ++i) {
        double r = opt.rho_min * std::pow(opt.rho_max / opt.rho_min, i / double(opt.samples - 1)), L = std::log(r);
        for (int j = 0; j < J; ++j)
            for (int l = 0; l < K; ++l) X(i, j * K + l) = std::pow(r, j) * std::pow(L, l);
        y(i) = f(r);
    }
    Vec sc = X.colwise().norm().transpose();
    Mat Xs = X * sc.cwiseInverse().asDiagonal();
    Eigen::JacobiSVD<Mat> svd(Xs, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Vec c = svd.solve(y).cwiseQuotient(sc);
    PhgDetection d;
    d.entries = IndexSet(A);
    d.coefficients = Eigen::Map<Mat>(c.data(), K, J).transpose();
    d.cond = svd.singularValues()(0) / svd.singularValues()(nb - 1);
    d.scale = y.cwiseAbs().maxCoeff();
    d.residual = (X * c - y).norm() / std::max(y.norm(), 1e-300);
    for (int j = 0; j < J && j < A; ++j)
        for (int l = 0; l < K; ++l)
            if (std::fabs(d.coefficients(j, l)) > opt.floor * d.scale) d.entries.insert(entry(0, -j, l));
    return d;
}

inline std::string poles_csv(const PoleReport& rep) {
    std::ostringstream os;
    os.precision(15);
    os << "re_sigma,im_sigma,order,confidence\n";
    for (const auto& p : rep.poles) os << p.z.real() << "," << p.z.imag() << "," << p.order << "," << p.confidence << "\n";
    return os.str();
}

// ---------- front-face fit ----------

struct FitOptions {
    bool absorber = true;
    std::vector<int> absorber_logs = {0, 1};  // rho^2 log^j rho columns
    double cond_bound = 1e8;
    int min_samples = 8;
    double min_octaves = 3;
};

// rho^2 absorber columns: the smooth index set has no logs at order 2; otherwise keep log^0, log^1
inline FitOptions fit_options_for(double m) {
    FitOptions o;
    if (m == 0) o.absorber_logs = {0};
    return o;
}

struct ExpansionFit {
    std::vector<double> s, w0, w10, w11, w12, residual, cond;
    std::vector<bool> flagged;  // conditioning above the bound
    bool absorber = false;
    std::vector<int> absorber_logs;
    std::string chart = "normal-form";
};

struct SliceFit {
    double w0 = 0, w10 = 0, w11 = 0, w12 = 0, residual = 0, cond = 0;
};

inline SliceFit fit_slice(const NullSlice& sl, const FitOptions& opt = {}) {
    const int n = static_cast<int>(sl.rho.size());
    require(n == static_cast<int>(sl.w.size()), "slice rho/w size mismatch");
    if (n < opt.min_samples) throw std::invalid_argument(cat("fit needs >= ", opt.min_samples, " samples per slice, got ", n));
    double rmin = *std::min_element(sl.rho.begin(), sl.rho.end()), rmax = *std::max_element(sl.rho.begin(), sl.rho.end());
    require(rmin > 0, "fit needs rho > 0");
    if (std::log2(rmax / rmin) < opt.min_octaves - 1e-9)
        throw std::invalid_argument(cat("fit needs >= ", opt.min_octaves, " octaves of rho, got ", std::log2(rmax / rmin)));
    const int nb = 4 + (opt.absorber ? static_cast<int>(opt.absorber_logs.size()) : 0);
    require(n >= nb, "fewer samples than basis functions");
    Mat X(n, nb);
    Vec y(n);
    for (int i = 0; i < n; ++i) {
        double r = sl.rho[i], L = std::log(r);
        X(i, 0) = 1;
        X(i, 1) = r;
        X(i, 2) = r * L;
        X(i, 3) = r * L * L;
        if (opt.absorber)
            for (size_t j = 0; j < opt.absorber_logs.size(); ++j) X(i, 4 + j) = r * r * std::pow(L, opt.absorber_logs[j]);
        y(i) = sl.w[i];
    }
    Vec colscale = X.colwise().norm().transpose();
    for (int c = 0; c < nb; ++c)
        if (colscale(c) == 0) colscale(c) = 1;
    Mat Xs = X * colscale.cwiseInverse().asDiagonal();
    Eigen::JacobiSVD<Mat> svd(Xs, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Vec coef = svd.solve(y).cwiseQuotient(colscale);
    SliceFit f;
    auto sv = svd.singularValues();
    f.cond = sv(sv.size() - 1) > 0 ? sv(0) / sv(sv.size() - 1) : INFINITY;
    f.w0 = coef(0);
    f.w10 = coef(1);
    f.w11 = coef(2);
    f.w12 = coef(3);
    double yn = y.norm();
    f.residual = (X * coef - y).norm() / (yn > 0 ? yn : 1.0);
    return f;
}

inline ExpansionFit fit_front_face(const std::vector<NullSlice>& slices, const FitOptions& opt = {}) {
    ExpansionFit out;
    out.absorber = opt.absorber;
    out.absorber_logs = opt.absorber_logs;
    const int n = static_cast<int>(slices.size());
    std::vector<SliceFit> fits(n);
    parallel_for(n, [&](int i) { fits[i] = fit_slice(slices[i], opt); });
    for (int i = 0; i < n; ++i) {
        out.s.push_back(slices[i].s);
        out.w0.push_back(fits[i].w0);
        out.w10.push_back(fits[i].w10);
        out.w11.push_back(fits[i].w11);
        out.w12.push_back(fits[i].w12);
        out.residual.push_back(fits[i].residual);
        out.cond.push_back(fits[i].cond);
        out.flagged.push_back(!(fits[i].cond <= opt.cond_bound));
    }
    return out;
}

// ---------- log-coefficient identity ----------

struct LogCoefficientReport {
    std::vector<double> s, dsw0, target, rel_residual;
    std::vector<bool> included;
    double max_rel_residual = 0;
    double integrated_residual = 0;  // first-order relation, relative to its largest term
    int excluded = 0;
    double sign = -1;
    double factor = 0;  // sign * (m^2/4)(omega - 2 alpha + beta)
};

// 4th-order first derivative on a uniform grid, one-sided 5-point stencils at the ends
inline std::vector<double> derivative4(const std::vector<double>& f, double h) {
    const int n = static_cast<int>(f.size());
    require(n >= 5, "derivative4 needs >= 5 samples");
    std::vector<double> d(n);
    for (int i = 0; i < n; ++i) {
        if (i >= 2 && i <= n - 3)
            d[i] = (f[i - 2] - 8 * f[i - 1] + 8 * f[i + 1] - f[i + 2]) / (12 * h);
        else if (i == 0)
            d[i] = (-25 * f[0] + 48 * f[1] - 36 * f[2] + 16 * f[3] - 3 * f[4]) / (12 * h);
        else if (i == 1)
            d[i] = (-3 * f[0] - 10 * f[1] + 18 * f[2] - 6 * f[3] + f[4]) / (12 * h);
        else if (i == n - 2)
            d[i] = (3 * f[n - 1] + 10 * f[n - 2] - 18 * f[n - 3] + 6 * f[n - 4] - f[n - 5]) / (12 * h);
        else
            d[i] = (25 * f[n - 1] - 48 * f[n - 2] + 36 * f[n - 3] - 16 * f[n - 4] + 3 * f[n - 5]) / (12 * h);
    }
    return d;
}

inline double uniform_step(const std::vector<double>& s) {
    require(s.size() >= 5, "need >= 5 s samples");
    double h = (s.back() - s.front()) / (s.size() - 1);
    for (size_t i = 1; i < s.size(); ++i)
        if (std::fabs(s[i] - s[i - 1] - h) > 1e-9 * std::fabs(h)) throw std::invalid_argument("s grid must be uniform");
    return h;
}

// Relative residual of w12 against sign (m^2/4)(omega - 2 alpha + beta) d_s w0.
inline LogCoefficientReport verify_log_coefficient(const ExpansionFit& fit, const NormalFormConstants& k,
                                                   double threshold = 0.1, double sign = -1) {
    LogCoefficientReport rep;
    rep.sign = sign;
    rep.factor = sign * 0.25 * k.m * k.m * (k.omega - 2 * k.alpha + k.beta);
    const double h = uniform_step(fit.s);
    rep.s = fit.s;
    rep.dsw0 = derivative4(fit.w0, h);
    auto d2w0 = derivative4(rep.dsw0, h);
    auto dw12 = derivative4(fit.w12, h);
    double dmax = 0;
    for (double d : rep.dsw0) dmax = std::max(dmax, std::fabs(d));
    const int n = static_cast<int>(fit.s.size());
    double imax = 0, iterm = 0;
    for (int i = 0; i < n; ++i) {
        double t = rep.factor * rep.dsw0[i];
        rep.target.push_back(t);
        bool inc = std::fabs(rep.dsw0[i]) >= threshold * dmax && dmax > 0;
        rep.included.push_back(inc);
        if (!inc) {
            ++rep.excluded;
            rep.rel_residual.push_back(std::numeric_limits<double>::quiet_NaN());
            continue;
        }
        double r = rep.factor == 0 ? std::fabs(fit.w12[i]) : std::fabs(fit.w12[i] - t) / std::fabs(t);
        rep.rel_residual.push_back(r);
        rep.max_rel_residual = std::max(rep.max_rel_residual, r);
        if (i >= 2 && i <= n - 3) {
            imax = std::max(imax, std::fabs(dw12[i] - rep.factor * d2w0[i]));
            iterm = std::max(iterm, std::fabs(rep.factor * d2w0[i]));
        }
    }
    rep.integrated_residual = iterm > 0 ? imax / iterm : imax;
    return rep;
}

inline std::string fit_csv(const ExpansionFit& fit, const LogCoefficientReport* rep = nullptr) {
    std::ostringstream os;
    os.precision(15);
    os << "s,w0,w1_0,w1_1,w1_2,residual,cond,target_w1_2,rel_residual\n";
    for (size_t i = 0; i < fit.s.size(); ++i) {
        os << fit.s[i] << "," << fit.w0[i] << "," << fit.w10[i] << "," << fit.w11[i] << "," << fit.w12[i] << ","
           << fit.residual[i] << "," << fit.cond[i] << ",";
        if (rep)
            os << rep->target[i] << "," << rep->rel_residual[i];
        else
            os << "nan,nan";
        os << "\n";
    }
    return os.str();
}

// ---------- tail decay ----------

struct TailFit {
    cplx p;
    int kappa = 0;
    cplx amplitude;
    double residual = 0;
    std::vector<double> kappa_residuals;
    cplx p_upper;  // exponent refitted on the upper half (in log s) of the window
    bool stable = false;
};

struct TailOptions {
    std::vector<int> kappas = {0, 1, 2};
    double p_min = -10, p_max = 2;
    bool allow_complex = true;
    double im_max = 6;
    double stability_tol = 0.05;
};

namespace detail {

struct TailEval {
    double residual;
    cplx amplitude;
};

// least squares for Re(A s^p log^k s) with A complex (two columns) or real (p real)
inline TailEval tail_residual(const std::vector<double>& s, const std::vector<double>& w, cplx p, int kappa) {
    const int n = static_cast<int>(s.size());
    const bool cx = p.imag() != 0;
    Mat X(n, cx ? 2 : 1);
    Vec y(n);
    for (int i = 0; i < n; ++i) {
        double L = std::log(s[i]);
        cplx b = std::exp(p * L) * std::pow(L, kappa);
        X(i, 0) = b.real();
        if (cx) X(i, 1) = -b.imag();
        y(i) = w[i];
    }
    Vec c = X.colPivHouseholderQr().solve(y);
    TailEval e;
    e.residual = (X * c - y).norm() / std::max(y.norm(), 1e-300);
    e.amplitude = cx ? cplx(c(0), c(1)) : cplx(c(0), 0);
    return e;
}

inline std::pair<cplx, TailEval> tail_best(const std::vector<double>& s, const std::vector<double>& w, int kappa,
                                           const TailOptions& opt) {
    auto over_re = [&](double im) {
        const int G = 120;
        double best = INFINITY, arg = opt.p_min;
        for (int g = 0; g <= G; ++g) {
            double pr = opt.p_min + (opt.p_max - opt.p_min) * g / G;
            double r = tail_residual(s, w, {pr, im}, kappa).residual;
            if (r < best) {
                best = r;
                arg = pr;
            }
        }
        double step = (opt.p_max - opt.p_min) / G;
        auto m = boost::math::tools::brent_find_minima(
            [&](double pr) { return tail_residual(s, w, {pr, im}, kappa).residual; },
            std::max(opt.p_min, arg - step), std::min(opt.p_max, arg + step), 50);
        return std::make_pair(m.first, m.second);
    };
    auto [pr, rr] = over_re(0.0);
    cplx bestp(pr, 0);
    double best = rr;
    if (opt.allow_complex) {
        const int G = 60;
        double bim = 0, bre = pr, bres = INFINITY;
        for (int g = 1; g <= G; ++g) {
            double im = opt.im_max * g / G;
            auto [q, r] = over_re(im);
            if (r < bres) {
                bres = r;
                bim = im;
                bre = q;
            }
        }
        // alternate one-dimensional refinements
        double h = opt.im_max / G;
        for (int it = 0; it < 6; ++it) {
            auto mi = boost::math::tools::brent_find_minima(
                [&](double im) { return tail_residual(s, w, {bre, im}, kappa).residual; }, std::max(1e-9, bim - h), bim + h, 50);
            bim = mi.first;
            auto mr = boost::math::tools::brent_find_minima(
                [&](double q) { return tail_residual(s, w, {q, bim}, kappa).residual; }, bre - 0.5, bre + 0.5, 50);
            bre = mr.first;
            bres = mr.second;
            h *= 0.5;
        }
        // an oscillation slower than a quarter period over the window is indistinguishable from a real p
        const double span = std::log(s.back() / s.front());
        if (bres < 0.1 * best && bim * span > pi / 2) {
            best = bres;
            bestp = cplx(bre, bim);
        }
    }
    return {bestp, tail_residual(s, w, bestp, kappa)};
}

}  // namespace detail

// Fit w ~ Re(A s^p (log s)^kappa) for large s; kappa chosen by smallest residual.
inline TailFit fit_tail_decay(const std::vector<double>& s, const std::vector<double>& w, const TailOptions& opt = {}) {
    require(s.size() == w.size() && s.size() >= 6, "tail fit needs >= 6 matching samples");
    for (double x : s) require(x > 1, "tail fit needs s > 1");
    TailFit tf;
    double best = INFINITY;
    for (int k : opt.kappas) {
        auto [p, e] = detail::tail_best(s, w, k, opt);
        tf.kappa_residuals.push_back(e.residual);
        if (e.residual < best * (1 - 1e-9)) {
            best = e.residual;
            tf.p = p;
            tf.kappa = k;
            tf.amplitude = e.amplitude;
            tf.residual = e.residual;
        }
    }
    // window stability: refit on the upper half in log s
    double mid = std::sqrt(s.front() * s.back());
    std::vector<double> s2, w2;
    for (size_t i = 0; i < s.size(); ++i)
        if (s[i] >= mid) {
            s2.push_back(s[i]);
            w2.push_back(w[i]);
        }
    if (s2.size() >= 6) {
        TailOptions o2 = opt;
        o2.kappas = {tf.kappa};
        tf.p_upper = detail::tail_best(s2, w2, tf.kappa, o2).first;
        tf.stable = std::abs(tf.p_upper - tf.p) <= opt.stability_tol;
    }
    return tf;
}

}  // namespace lrs
