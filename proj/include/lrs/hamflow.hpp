#pragma once

#include "geometry.hpp"

#include <boost/numeric/odeint.hpp>

#include <map>

namespace lrs {

// lambda with its gradients in the base (rho, v, y) and in the fiber (xi, gamma, eta)
struct SymbolJet {
    double lam = 0;
    Vec dx, dz;
};

inline SymbolJet symbol_jet(const MetricModel& mdl, const BasePoint& b, const Vec& z) {
    DMat G = dual_metric_matrix(mdl, seed(b));
    const int n = mdl.n;
    require(z.size() == n, "fiber dimension mismatch");
    Dual lam = constant(0.0, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) lam = lam + (z(i) * z(j)) * G(i, j);
    SymbolJet J;
    J.lam = lam.value();
    J.dx = lam.derivatives();
    J.dz = 2.0 * values(G) * z;
    return J;
}

// Coefficients of H_lambda over (rho d_rho, d_v, d_y, d_xi, d_gamma, d_eta).
inline Vec hamilton_vector(const MetricModel& mdl, const CotangentPoint& p) {
    detail::check_base(mdl, p.base());
    const int n = mdl.n, k = n - 2;
    auto J = symbol_jet(mdl, p.base(), p.fiber());
    Vec h(2 * n);
    h(0) = J.dz(0);
    h(1) = J.dz(1);
    for (int j = 0; j < k; ++j) h(2 + j) = J.dz(2 + j);
    h(n) = -p.rho * J.dx(0);
    h(n + 1) = -J.dx(1);
    for (int j = 0; j < k; ++j) h(n + 2 + j) = -J.dx(2 + j);
    return h;
}

inline double radial_distance(const CotangentPoint& p) {
    double xh = p.xi_hat(), s = p.rho * p.rho + p.v * p.v + xh * xh;
    for (double e : p.eta_hat()) s += e * e;
    return std::sqrt(s);
}

namespace detail {

// Both charts store 2n numbers. Open: (rho, v, xi, gamma, eta, y). Compact: (rho, v, nu, xi_hat, eta_hat, y).
inline BasePoint state_base(const Vec& x, int n) {
    BasePoint b{x(0), x(1), {}};
    for (int j = 0; j < n - 2; ++j) b.y.push_back(x(n + 2 + j));
    return b;
}

inline Vec open_field(const MetricModel& mdl, const Vec& x) {
    const int n = mdl.n, k = n - 2;
    Vec z = x.segment(2, n);
    auto J = symbol_jet(mdl, state_base(x, n), z);
    Vec f(2 * n);
    f(0) = x(0) * J.dz(0);
    f(1) = J.dz(1);
    f(2) = -x(0) * J.dx(0);
    f(3) = -J.dx(1);
    for (int j = 0; j < k; ++j) {
        f(4 + j) = -J.dx(2 + j);
        f(n + 2 + j) = J.dz(2 + j);
    }
    return f;
}

// nu H_lambda in compactified fiber coordinates; regular at nu = 0
inline Vec compact_field(const MetricModel& mdl, const Vec& x) {
    const int n = mdl.n, k = n - 2;
    Vec z(n);
    z(0) = x(3);
    z(1) = 1.0;
    for (int j = 0; j < k; ++j) z(2 + j) = x(4 + j);
    auto J = symbol_jet(mdl, state_base(x, n), z);
    Vec f(2 * n);
    f(0) = x(0) * J.dz(0);
    f(1) = J.dz(1);
    f(2) = x(2) * J.dx(1);
    f(3) = -x(0) * J.dx(0) + x(3) * J.dx(1);
    for (int j = 0; j < k; ++j) {
        f(4 + j) = -J.dx(2 + j) + x(4 + j) * J.dx(1);
        f(n + 2 + j) = J.dz(2 + j);
    }
    return f;
}

inline Vec open_state(const CotangentPoint& p, int n) {
    Vec x(2 * n);
    x(0) = p.rho;
    x(1) = p.v;
    x(2) = p.xi;
    x(3) = p.gamma;
    for (int j = 0; j < n - 2; ++j) {
        x(4 + j) = p.eta[j];
        x(n + 2 + j) = p.y[j];
    }
    return x;
}

inline Vec compact_state(const CotangentPoint& p, int n) {
    Vec x(2 * n);
    x(0) = p.rho;
    x(1) = p.v;
    x(2) = p.nu();
    x(3) = p.xi_hat();
    auto eh = p.eta_hat();
    for (int j = 0; j < n - 2; ++j) {
        x(4 + j) = eh[j];
        x(n + 2 + j) = p.y[j];
    }
    return x;
}

inline CotangentPoint point_from_state(const Vec& x, int n, bool compact) {
    BasePoint b = state_base(x, n);
    if (compact) {
        std::vector<double> eh(x.data() + 4, x.data() + 4 + (n - 2));
        return CotangentPoint::from_compact(b, x(2), x(3), eh);
    }
    CotangentPoint p{b.rho, b.v, b.y, x(2), x(3), {}};
    for (int j = 0; j < n - 2; ++j) p.eta.push_back(x(4 + j));
    return p;
}

inline bool in_domain(const MetricModel& mdl, const BasePoint& b, double rho_cap) {
    if (!std::isfinite(b.rho) || !std::isfinite(b.v)) return false;
    for (double y : b.y)
        if (!std::isfinite(y)) return false;
    if (b.rho < 0 || b.rho > rho_cap || !(b.v < mdl.v_max)) return false;
    return !mdl.in_chart || mdl.in_chart(b.y);
}

}  // namespace detail

enum class Termination { reached_radial_set, left_chart, horizon_exhausted, integration_failure };

inline const char* termination_name(Termination t) {
    switch (t) {
        case Termination::reached_radial_set: return "reached-radial-set";
        case Termination::left_chart: return "left-chart";
        case Termination::horizon_exhausted: return "horizon-exhausted";
        case Termination::integration_failure: return "integration-failure";
    }
    return "?";
}

struct Bicharacteristic {
    std::vector<double> params;
    std::vector<CotangentPoint> points;
    std::vector<double> lambda;  // lambda / |zeta|^2, which is constant along the projected curve
    Termination reason = Termination::horizon_exhausted;
    int chart_switches = 0;

    double max_abs_lambda() const {
        double r = 0;
        for (double l : lambda) r = std::max(r, std::fabs(l));
        return r;
    }
};

struct TraceOptions {
    double tol = 1e-3;            // radial-distance threshold and null tolerance
    double rtol = 1e-10, atol = 1e-12;
    double switch_gamma = 1e3;    // open -> compact when |gamma| exceeds this (seeds have |zeta| = 1)
    double switch_back = 1e3;     // compact -> open when |xi_hat| or |eta_hat| exceeds this
    int consecutive = 10;
    double rho_cap = 0;           // 0 selects 2 * rho_max
    int direction = 1;            // +1 forward along H_lambda, -1 backward
    bool null_mode = true;
    double min_step = 1e-13;
    long max_steps = 400000;
};

// Adaptive dopri5 integration of the projected flow; H_lambda / |zeta| in the open chart and
// |nu| H_lambda in the compactified one (same curves, different parametrization).
inline Bicharacteristic trace_bicharacteristic(const MetricModel& mdl, const CotangentPoint& p0, double horizon,
                                               const TraceOptions& opt = {}) {
    namespace ode = boost::numeric::odeint;
    detail::check_base(mdl, p0.base());
    require(static_cast<int>(p0.eta.size()) == mdl.n - 2, "fiber dimension mismatch");
    require(opt.direction == 1 || opt.direction == -1, "direction must be +1 or -1");
    const int n = mdl.n;
    const double zn0 = p0.fiber().norm();
    require(zn0 > 0, "bicharacteristics need a nonzero covector");
    const double lam0 = b_symbol(mdl, p0) / (zn0 * zn0);
    if (opt.null_mode && std::fabs(lam0) > opt.tol)
        throw std::invalid_argument(cat("null tracing needs lambda(p0) = 0, got normalized lambda ", lam0));
    const double cap = opt.rho_cap > 0 ? opt.rho_cap : 2 * mdl.rho_max;

    Bicharacteristic bc;
    bool compact = false;
    double orient = opt.direction;
    Vec x = detail::open_state(p0, n);
    x.segment(2, n) /= zn0;
    if (std::fabs(x(3)) > opt.switch_gamma) {
        compact = true;
        orient = opt.direction * (x(3) > 0 ? 1 : -1);
        x = detail::compact_state(detail::point_from_state(x, n, false), n);
    }
    auto record = [&](double t) {
        CotangentPoint p = detail::point_from_state(x, n, compact);
        double zn2 = compact ? 1.0 + x.segment(3, n - 1).squaredNorm() : p.fiber().squaredNorm();
        double lam = compact ? symbol_jet(mdl, p.base(), [&] {
            Vec z(n);
            z(0) = x(3);
            z(1) = 1;
            for (int j = 0; j < n - 2; ++j) z(2 + j) = x(4 + j);
            return z;
        }()).lam : b_symbol(mdl, p);
        bc.params.push_back(t);
        bc.points.push_back(p);
        bc.lambda.push_back(lam / zn2);
    };
    record(0);
    if (!(horizon > 0)) return bc;

    using state = std::vector<double>;
    auto stepper = ode::make_controlled(opt.atol, opt.rtol, ode::runge_kutta_dopri5<state>());
    auto sys = [&](const state& s, state& ds, double) {
        Vec xs = Eigen::Map<const Vec>(s.data(), s.size());
        Vec f;
        if (compact) {
            f = orient * detail::compact_field(mdl, xs);
        } else {
            double zn = xs.segment(2, n).norm();
            f = (opt.direction / zn) * detail::open_field(mdl, xs);
        }
        ds.assign(f.data(), f.data() + f.size());
    };
    double t = 0, dt = 1e-3;
    int run = 0;
    long steps = 0;
    state s(x.data(), x.data() + x.size());
    while (t < horizon) {
        if (++steps > opt.max_steps) {
            bc.reason = Termination::integration_failure;
            return bc;
        }
        double h = std::min(dt, horizon - t), t_try = t;
        state trial = s;
        ode::controlled_step_result res;
        try {
            res = stepper.try_step(sys, trial, t_try, h);
        } catch (const std::exception&) {
            res = ode::fail;
            h = 0.25 * std::min(dt, horizon - t);
        }
        bool finite = std::all_of(trial.begin(), trial.end(), [](double v) { return std::isfinite(v); });
        if (res == ode::fail || !finite) {
            stepper.reset();  // FSAL cache may hold a bad derivative
            dt = res == ode::fail && finite ? h : 0.25 * std::min(dt, horizon - t);
            if (dt < opt.min_step) {
                bc.reason = Termination::integration_failure;
                return bc;
            }
            continue;
        }
        Vec xt = Eigen::Map<const Vec>(trial.data(), trial.size());
        if (!detail::in_domain(mdl, detail::state_base(xt, n), cap)) {
            bc.reason = Termination::left_chart;
            return bc;
        }
        s = trial;
        t = t_try;
        dt = h;
        x = xt;
        // chart handoff
        if (!compact && std::fabs(x(3)) > opt.switch_gamma) {
            orient = opt.direction * (x(3) > 0 ? 1 : -1);
            x = detail::compact_state(detail::point_from_state(x, n, false), n);
            compact = true;
            ++bc.chart_switches;
            stepper.reset();
        } else if (compact && x.segment(3, n - 1).cwiseAbs().maxCoeff() > opt.switch_back) {
            CotangentPoint p = detail::point_from_state(x, n, true);
            x = detail::open_state(p, n);
            x.segment(2, n) /= x.segment(2, n).norm();
            compact = false;
            ++bc.chart_switches;
            stepper.reset();
        }
        s.assign(x.data(), x.data() + x.size());
        record(t);
        const auto& p = bc.points.back();
        bool near = p.gamma != 0 && radial_distance(p) < opt.tol && compact && orient > 0;
        run = near ? run + 1 : 0;
        if (run >= opt.consecutive) {
            bc.reason = Termination::reached_radial_set;
            return bc;
        }
    }
    bc.reason = Termination::horizon_exhausted;
    return bc;
}

// ---------- linearization at the radial set ----------

struct EigenCluster {
    cplx value;
    int algebraic = 0;
    int geometric = 0;
};

struct LinearizationReport {
    Mat A;  // d(nu H_lambda) at the radial point, coordinates (rho, v, nu, xi_hat, eta_hat, y)
    std::vector<std::string> coords;
    std::vector<EigenCluster> eigen;
    bool jordan_block = false;
    std::vector<CheckResult> covectors;
    double step_drift = 0;  // eigenvalue change across the step sweep
    std::vector<double> y0;
    Vec c;  // rho-coefficient of the y-velocity, halved
};

struct LinearizationOptions {
    double step = 2e-3;
    double sweep = 4;  // second step = sweep * step
    double cluster_tol = 1e-4;
    double rank_tol = 1e-6;
    double covector_tol = 1e-8;
    double drift_tol = 1e-6;
};

namespace detail {

inline Mat fd_jacobian(const std::function<Vec(const Vec&)>& F, const Vec& x0, double h) {
    const int N = x0.size();
    Mat A(N, N);
    auto cd = [&](int j, double s) {
        Vec a = x0, b = x0;
        a(j) += s;
        b(j) -= s;
        return Vec((F(a) - F(b)) / (2 * s));
    };
    for (int j = 0; j < N; ++j) A.col(j) = (4 * cd(j, h / 2) - cd(j, h)) / 3;
    return A;
}

inline std::vector<EigenCluster> eigen_clusters(const Mat& A, double ctol, double rtol) {
    Eigen::EigenSolver<Mat> es(A, false);
    std::vector<cplx> ev(es.eigenvalues().data(), es.eigenvalues().data() + A.rows());
    std::sort(ev.begin(), ev.end(), [](cplx a, cplx b) { return a.real() < b.real(); });
    std::vector<std::vector<cplx>> groups;
    for (auto e : ev) {
        bool placed = false;
        for (auto& g : groups)
            if (std::abs(g.front() - e) < ctol) {
                g.push_back(e);
                placed = true;
                break;
            }
        if (!placed) groups.push_back({e});
    }
    std::vector<EigenCluster> out;
    double scale = std::max(1.0, A.norm());
    for (const auto& g : groups) {
        EigenCluster c;
        for (auto e : g) c.value += e;
        c.value /= double(g.size());
        c.algebraic = static_cast<int>(g.size());
        Mat B = A - c.value.real() * Mat::Identity(A.rows(), A.cols());
        Eigen::JacobiSVD<Mat> svd(B);
        auto sv = svd.singularValues();
        for (int i = 0; i < sv.size(); ++i)
            if (sv(i) < rtol * scale) ++c.geometric;
        out.push_back(c);
    }
    return out;
}

}  // namespace detail

inline LinearizationReport linearization(const MetricModel& mdl, std::vector<double> y0 = {},
                                         const LinearizationOptions& opt = {}) {
    const int n = mdl.n, k = n - 2, N = 2 * n;
    if (y0.empty()) y0 = mdl.sample_y(std::vector<double>(k, 0.5));
    detail::check_base(mdl, BasePoint{0, 0, y0});
    LinearizationReport R;
    R.y0 = y0;
    R.coords = {"rho", "v", "nu", "xi_hat"};
    for (int j = 0; j < k; ++j) R.coords.push_back(cat("eta_hat", j));
    for (int j = 0; j < k; ++j) R.coords.push_back(cat("y", j));
    Vec x0 = Vec::Zero(N);
    for (int j = 0; j < k; ++j) x0(n + 2 + j) = y0[j];
    auto F = [&](const Vec& x) { return detail::compact_field(mdl, x); };
    R.A = detail::fd_jacobian(F, x0, opt.step);
    Mat A2 = detail::fd_jacobian(F, x0, opt.sweep * opt.step);
    R.eigen = detail::eigen_clusters(R.A, opt.cluster_tol, opt.rank_tol);
    auto e2 = detail::eigen_clusters(A2, opt.cluster_tol, opt.rank_tol);
    if (e2.size() != R.eigen.size())
        throw std::runtime_error("linearization: eigenvalue clusters change across the step sweep");
    for (size_t i = 0; i < e2.size(); ++i)
        R.step_drift = std::max(R.step_drift, std::abs(e2[i].value - R.eigen[i].value) / std::max(1.0, std::abs(R.eigen[i].value)));
    if (R.step_drift > opt.drift_tol)
        throw std::runtime_error(cat("linearization: finite differences did not converge (drift ", R.step_drift, ")"));
    for (const auto& c : R.eigen) R.jordan_block = R.jordan_block || c.geometric < c.algebraic;

    // frame quantities at the radial point
    Mat G = dual_metric_matrix(mdl, BasePoint{0, 0, y0});
    auto ups = mdl.upsilon(seed(BasePoint{0, 0, y0}));
    const double m = mdl.m;
    R.c = Vec(k);
    for (int j = 0; j < k; ++j) R.c(j) = 0.5 * R.A(n + 2 + j, 0);
    enum { RHO = 0, V = 1, NU = 2, XI = 3 };
    auto check = [&](std::string name, const Vec& w, double mu) {
        double res = (w.transpose() * R.A - mu * w.transpose()).cwiseAbs().maxCoeff();
        R.covectors.push_back({std::move(name), res <= opt.covector_tol, res, opt.covector_tol, cat("eigenvalue ", mu)});
    };
    Vec w = Vec::Zero(N);
    w(V) = 1;
    w(XI) = 1;
    w(RHO) = -m;
    check("dv + dxi_hat - m drho", w, -8);
    for (int idx : {int(RHO), int(NU)}) {
        w.setZero();
        w(idx) = 1;
        check(cat("d", R.coords[idx]), w, -4);
    }
    for (int j = 0; j < k; ++j) {
        w.setZero();
        w(4 + j) = 1;
        check(cat("deta_hat", j), w, -4);
    }
    for (int j = 0; j < k; ++j) {
        double gry = G(0, 2 + j), U = ups[j].value();
        w.setZero();
        w(n + 2 + j) = 4;
        for (int l = 0; l < k; ++l) w(4 + l) = 2 * G(2 + j, 2 + l);
        w(RHO) = 2 * R.c(j) - 3 * m * U - 2 * m * gry;
        w(V) = -U;
        w(XI) = 2 * gry + U;
        check(cat("zero covector y", j), w, 0);
    }
    // dxi_hat (A + 4) = -4 m drho: the Jordan chain when m != 0
    Vec chain = R.A.row(XI).transpose() + 4 * Vec::Unit(N, XI);
    chain(RHO) += 4 * m;
    double res = chain.cwiseAbs().maxCoeff();
    R.covectors.push_back({"jordan chain dxi_hat -> -4m drho", res <= opt.covector_tol, res, opt.covector_tol, ""});
    return R;
}

// ---------- non-trapping ----------

// Deterministic null covector over a compact base region: quasi-random base point and (xi, eta),
// gamma solving lambda = 0 (root chosen by index parity), then |zeta| = 1.
inline CotangentPoint null_seed(const MetricModel& mdl, int index) {
    const int n = mdl.n, k = n - 2;
    auto u = kronecker_point(index, 2 * n - 1);
    std::vector<double> uy(u.begin() + 2, u.begin() + n);
    BasePoint b{mdl.rho_max * (0.2 + 0.8 * u[0]), 0.5 * (2 * u[1] - 1), mdl.sample_y(uy)};
    Mat G = dual_metric_matrix(mdl, b);
    double xi = 2 * u[n] - 1;
    std::vector<double> eta(k);
    for (int j = 0; j < k; ++j) eta[j] = 2 * u[n + 1 + j] - 1;
    for (int attempt = 0; attempt < 60; ++attempt) {
        Vec z(n);
        z(0) = xi;
        z(1) = 0;
        for (int j = 0; j < k; ++j) z(2 + j) = eta[j];
        double a = G(1, 1), bb = 2 * G.row(1).dot(z), c = z.dot(G * z);
        double disc = bb * bb - 4 * a * c;
        if (disc >= 0 && (a != 0 || bb != 0)) {
            double gamma;
            if (std::fabs(a) < 1e-14 * std::max(1.0, std::fabs(bb))) {
                gamma = -c / bb;
            } else {
                double q = -0.5 * (bb + std::copysign(std::sqrt(disc), bb));
                double r1 = q / a, r2 = q != 0 ? c / q : 0.0;
                gamma = (index % 2 == 0) ? std::max(r1, r2) : std::min(r1, r2);
            }
            CotangentPoint p{b.rho, b.v, b.y, xi, gamma, eta};
            double s = p.fiber().norm();
            p.xi /= s;
            p.gamma /= s;
            for (auto& e : p.eta) e /= s;
            return p;
        }
        for (auto& e : eta) e *= 0.5;
        if (xi == 0) xi = 1;
    }
    throw std::runtime_error("null_seed: no null covector found");
}

struct SeedOutcome {
    CotangentPoint seed;
    Termination forward = Termination::horizon_exhausted, backward = Termination::horizon_exhausted;
    bool reached = false;
    bool classified = false;  // reached a radial set, or left the chart in both directions
    double final_distance = INFINITY;
    double max_abs_lambda = 0;
};

struct NontrappingReport {
    int seeds = 0, reached = 0, left_chart = 0, unclassified = 0;
    std::vector<SeedOutcome> outcomes;
    bool pass = false;
};

inline NontrappingReport check_nontrapping(const MetricModel& mdl, int seeds, double horizon, double tol,
                                           TraceOptions opt = {}) {
    require(seeds >= 0, "seed count must be >= 0");
    opt.tol = tol;
    NontrappingReport rep;
    rep.seeds = seeds;
    rep.outcomes.resize(seeds);
    parallel_for(seeds, [&](int i) {
        TraceOptions o_opt = opt;
        SeedOutcome o;
        o.seed = null_seed(mdl, i);
        for (int dir : {1, -1}) {
            o_opt.direction = dir;
            auto bc = trace_bicharacteristic(mdl, o.seed, horizon, o_opt);
            (dir == 1 ? o.forward : o.backward) = bc.reason;
            o.max_abs_lambda = std::max(o.max_abs_lambda, bc.max_abs_lambda());
            if (bc.reason == Termination::reached_radial_set) {
                o.reached = true;
                o.final_distance = radial_distance(bc.points.back());
                break;
            }
        }
        o.classified = o.reached || (o.forward == Termination::left_chart && o.backward == Termination::left_chart);
        rep.outcomes[i] = std::move(o);
    });
    for (const auto& o : rep.outcomes) {
        if (o.reached)
            ++rep.reached;
        else if (o.classified)
            ++rep.left_chart;
        else
            ++rep.unclassified;
    }
    rep.pass = seeds > 0 && rep.unclassified == 0;
    return rep;
}

inline std::string nontrapping_csv(const NontrappingReport& rep) {
    std::ostringstream os;
    os.precision(15);
    os << "seed,rho,v,xi,gamma,forward,backward,reached,classified,final_distance,max_abs_lambda\n";
    for (size_t i = 0; i < rep.outcomes.size(); ++i) {
        const auto& o = rep.outcomes[i];
        os << i << "," << o.seed.rho << "," << o.seed.v << "," << o.seed.xi << "," << o.seed.gamma << "," << termination_name(o.forward)
           << "," << termination_name(o.backward) << "," << o.reached << "," << o.classified << "," << o.final_distance << ","
           << o.max_abs_lambda << "\n";
    }
    return os.str();
}

// One row per stored point: trajectory id, parameter, base and fiber coordinates, normalized lambda.
inline std::string trajectories_csv(const std::vector<Bicharacteristic>& curves) {
    std::ostringstream os;
    os.precision(15);
    size_t ny = 0, ne = 0;
    for (const auto& c : curves)
        if (!c.points.empty()) {
            ny = c.points[0].y.size();
            ne = c.points[0].eta.size();
            break;
        }
    os << "id,param,rho,v";
    for (size_t j = 0; j < ny; ++j) os << ",y" << j;
    os << ",xi,gamma";
    for (size_t j = 0; j < ne; ++j) os << ",eta" << j;
    os << ",lambda,termination\n";
    for (size_t c = 0; c < curves.size(); ++c) {
        const auto& bc = curves[c];
        for (size_t k = 0; k < bc.points.size(); ++k) {
            const auto& p = bc.points[k];
            os << c << "," << bc.params[k] << "," << p.rho << "," << p.v;
            for (double y : p.y) os << "," << y;
            os << "," << p.xi << "," << p.gamma;
            for (double e : p.eta) os << "," << e;
            os << "," << (k < bc.lambda.size() ? bc.lambda[k] : 0.0) << "," << termination_name(bc.reason) << "\n";
        }
    }
    return os.str();
}

}  // namespace lrs
