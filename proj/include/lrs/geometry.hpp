#pragma once

#include "common.hpp"

#include <json.hpp>

#include <optional>

namespace lrs {

using json = nlohmann::json;

using ScalarFn = std::function<Dual(const BasePointD&)>;
using VectorFn = std::function<std::vector<Dual>(const BasePointD&)>;
using MatrixFn = std::function<DMat(const BasePointD&)>;

enum class Slot { rr, rv, vv, ry, vy, yy };

inline const char* slot_name(Slot s) {
    switch (s) {
        case Slot::rr: return "rr";
        case Slot::rv: return "rv";
        case Slot::vv: return "vv";
        case Slot::ry: return "ry";
        case Slot::vy: return "vy";
        case Slot::yy: return "yy";
    }
    return "?";
}

inline Slot slot_from_name(const std::string& s) {
    if (s == "rr") return Slot::rr;
    if (s == "rv") return Slot::rv;
    if (s == "vv") return Slot::vv;
    if (s == "ry") return Slot::ry;
    if (s == "vy") return Slot::vy;
    if (s == "yy") return Slot::yy;
    throw std::invalid_argument("unknown remainder slot '" + s + "'");
}

struct Monomial {
    int rho_pow = 0, v_pow = 0;
};

// Correction term added to one dual-metric slot; declared to vanish like sum of |monomials|.
struct Remainder {
    Slot slot = Slot::rr;
    int i = 0, j = 0;  // angular indices for ry, vy, yy
    ScalarFn f;
    std::vector<Monomial> vanishing;
};

struct MetricModel {
    std::string label;
    int n = 4;
    double m = 0;
    ScalarFn omega, alpha, beta;
    VectorFn mu, upsilon;
    MatrixFn h_inv;
    std::vector<Remainder> remainders;
    // maps [0,1]^{n-2} into the sampled part of the angular chart
    std::function<std::vector<double>(const std::vector<double>&)> sample_y;
    std::function<bool(const std::vector<double>&)> in_chart;
    double v_max = 1.0;    // chart requires v < v_max
    double rho_max = 0.1;  // sampling scale inside the chart's validity region
    json spec;           // reproduces the model through make_model
};

struct CotangentPoint {
    double rho = 0, v = 0;
    std::vector<double> y;
    double xi = 0, gamma = 0;
    std::vector<double> eta;

    BasePoint base() const { return {rho, v, y}; }
    Vec fiber() const {
        Vec z(2 + eta.size());
        z(0) = xi;
        z(1) = gamma;
        for (size_t j = 0; j < eta.size(); ++j) z(2 + j) = eta[j];
        return z;
    }
    bool has_compact() const { return gamma != 0.0; }
    double nu() const {
        require(gamma != 0.0, "compactified fiber coordinates need gamma != 0");
        return 1.0 / gamma;
    }
    double xi_hat() const { return xi * nu(); }
    std::vector<double> eta_hat() const {
        std::vector<double> r(eta.size());
        for (size_t j = 0; j < eta.size(); ++j) r[j] = eta[j] * nu();
        return r;
    }
    static CotangentPoint from_compact(const BasePoint& b, double nu, double xi_hat,
                                       const std::vector<double>& eta_hat) {
        require(nu != 0.0, "nu must be nonzero");
        CotangentPoint p{b.rho, b.v, b.y, xi_hat / nu, 1.0 / nu, {}};
        for (double e : eta_hat) p.eta.push_back(e / nu);
        return p;
    }
};

namespace detail {

inline Dual ipow(const Dual& x, int k) {
    Dual r = constant(1.0, static_cast<int>(x.derivatives().size()));
    for (int i = 0; i < k; ++i) r = r * x;
    return r;
}

inline void check_base(const MetricModel& mdl, const BasePoint& p) {
    if (static_cast<int>(p.y.size()) != mdl.n - 2)
        throw std::invalid_argument(cat("expected ", mdl.n - 2, " angular coordinates, got ", p.y.size()));
    if (!(p.rho >= 0)) throw std::domain_error(cat("rho must be >= 0, got ", p.rho));
    if (!(p.v < mdl.v_max)) throw std::domain_error(cat("v must be < ", mdl.v_max, ", got ", p.v));
    if (mdl.in_chart && !mdl.in_chart(p.y)) throw std::domain_error("angular point outside chart");
}

inline std::vector<double> box_sample(const std::vector<double>& u, double half) {
    std::vector<double> y(u.size());
    for (size_t j = 0; j < u.size(); ++j) y[j] = half * (2 * u[j] - 1);
    return y;
}

}  // namespace detail

// Dual metric in the frame (drho/rho^2, dv/rho, dy/rho); differentiable in the base point.
inline DMat dual_metric_matrix(const MetricModel& mdl, const BasePointD& p) {
    const int n = mdl.n, k = n - 2;
    const int nd = static_cast<int>(p.rho.derivatives().size());
    DMat G(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) G(i, j) = constant(0.0, nd);
    G(0, 0) = mdl.omega(p);
    G(0, 1) = -2.0 + mdl.alpha(p) * p.v;
    G(1, 1) = -4.0 * p.v + 4.0 * mdl.m * p.rho + mdl.beta(p) * p.v * p.v;
    auto mu = mdl.mu(p);
    auto up = mdl.upsilon(p);
    DMat h = mdl.h_inv(p);
    for (int j = 0; j < k; ++j) {
        G(0, 2 + j) = -0.5 * mu[j];
        G(1, 2 + j) = -p.v * up[j];
        for (int l = 0; l < k; ++l) G(2 + j, 2 + l) = -h(j, l);
    }
    for (const auto& r : mdl.remainders) {
        Dual val = r.f(p);
        int a = 0, b = 0;
        switch (r.slot) {
            case Slot::rr: a = 0; b = 0; break;
            case Slot::rv: a = 0; b = 1; break;
            case Slot::vv: a = 1; b = 1; break;
            case Slot::ry: a = 0; b = 2 + r.i; break;
            case Slot::vy: a = 1; b = 2 + r.i; break;
            case Slot::yy: a = 2 + r.i; b = 2 + r.j; break;
        }
        G(a, b) = G(a, b) + val;
    }
    // remainders live in the upper triangle (yy declared with i <= j)
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < i; ++j) G(i, j) = G(j, i);
    return G;
}

inline Mat dual_metric_matrix(const MetricModel& mdl, const BasePoint& p) {
    detail::check_base(mdl, p);
    return values(dual_metric_matrix(mdl, seed(p)));
}

inline double b_symbol(const MetricModel& mdl, const CotangentPoint& p) {
    Mat G = dual_metric_matrix(mdl, p.base());
    Vec z = p.fiber();
    require(z.size() == G.rows(), "fiber dimension mismatch");
    return z.dot(G * z);
}

// Dual metric in the coordinate frame (drho, dv, dy).
inline Mat coordinate_dual_metric(const MetricModel& mdl, const BasePoint& p) {
    Mat G = dual_metric_matrix(mdl, p);
    Vec s = Vec::Constant(mdl.n, p.rho);
    s(0) = p.rho * p.rho;
    return s.asDiagonal() * G * s.asDiagonal();
}

// The b-symbol recomputed from the coordinate-frame metric: rho^{-2} g(zeta_coord, zeta_coord).
inline double b_symbol_via_coordinates(const MetricModel& mdl, const CotangentPoint& p) {
    require(p.rho > 0, "coordinate route needs rho > 0");
    Mat Gc = coordinate_dual_metric(mdl, p.base());
    Vec z = p.fiber();
    z(0) /= p.rho;
    return z.dot(Gc * z) / (p.rho * p.rho);
}

// ---------- models ----------

inline MetricModel make_minkowski(int n = 4) {
    require(n >= 3 && n <= max_dim, cat("dimension n must be in [3, ", max_dim, "]"));
    MetricModel mdl;
    mdl.label = "minkowski";
    mdl.n = n;
    mdl.m = 0;
    mdl.omega = [](const BasePointD& p) { return constant(1.0, p.rho.derivatives().size()); };
    mdl.alpha = [](const BasePointD& p) { return constant(2.0, p.rho.derivatives().size()); };
    mdl.beta = [](const BasePointD& p) { return constant(4.0, p.rho.derivatives().size()); };
    auto zeros = [k = n - 2](const BasePointD& p) {
        return std::vector<Dual>(k, constant(0.0, p.rho.derivatives().size()));
    };
    mdl.mu = zeros;
    mdl.upsilon = zeros;
    // round sphere in stereographic coordinates: Omega^{-1} = (1+|y|^2)^2/4
    mdl.h_inv = [k = n - 2](const BasePointD& p) {
        const int nd = p.rho.derivatives().size();
        Dual r2 = constant(0.0, nd);
        for (const auto& yj : p.y) r2 = r2 + yj * yj;
        Dual f = (1.0 + r2) * (1.0 + r2) / (4.0 * (1.0 - p.v));
        DMat h(k, k);
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j) h(i, j) = i == j ? f : constant(0.0, nd);
        return h;
    };
    mdl.sample_y = [](const std::vector<double>& u) { return detail::box_sample(u, 1.5); };
    mdl.in_chart = [](const std::vector<double>& y) {
        double r2 = 0;
        for (double x : y) r2 += x * x;
        return r2 < 1e4;
    };
    mdl.v_max = 1.0;
    mdl.spec = {{"kind", "minkowski"}, {"n", n}};
    return mdl;
}

// Kerr exterior far from the horizon in the chart rho = 1/t, v = v0 - v0^2/4, v0 = 2(1 - r/t),
// angular chart (theta, phi) from Boyer-Lindquist coordinates.
inline MetricModel make_kerr_exterior(double M, double a) {
    if (!(M > 0)) throw std::invalid_argument(cat("Kerr mass must be > 0, got ", M));
    if (!(std::fabs(a) < M)) throw std::invalid_argument(cat("Kerr spin must satisfy |a| < M, got a=", a, " M=", M));
    MetricModel mdl;
    mdl.label = a == 0 ? "schwarzschild" : "kerr";
    mdl.n = 4;
    mdl.m = 4 * M;
    auto c1 = [](const BasePointD& p) { return constant(1.0, p.rho.derivatives().size()); };
    mdl.omega = c1;
    mdl.alpha = [](const BasePointD& p) { return constant(2.0, p.rho.derivatives().size()); };
    mdl.beta = [](const BasePointD& p) { return constant(4.0, p.rho.derivatives().size()); };
    auto zeros = [](const BasePointD& p) {
        return std::vector<Dual>(2, constant(0.0, p.rho.derivatives().size()));
    };
    mdl.mu = zeros;
    mdl.upsilon = zeros;
    mdl.h_inv = [](const BasePointD& p) {
        using std::sin;
        const int nd = p.rho.derivatives().size();
        Dual s = sin(p.y[0]);
        DMat h(2, 2);
        h(0, 0) = 1.0 / (1.0 - p.v);
        h(1, 1) = 1.0 / ((1.0 - p.v) * s * s);
        h(0, 1) = h(1, 0) = constant(0.0, nd);
        return h;
    };

    // rho^2-rescaled Kerr quantities, regular at rho = 0: q = r rho, Dr = Delta rho^2, Sr = Sigma rho^2
    struct K {
        Dual q, q2, s2, c2, Dr, Sr, dtt, drr, gtphi_r3;  // gtphi_r3 = g^{t phi} / rho^3
    };
    auto kerr = [M, a](const BasePointD& p) {
        using std::cos;
        using std::sin;
        using std::sqrt;
        K k;
        k.q2 = 1.0 - p.v;
        k.q = sqrt(k.q2);
        Dual s = sin(p.y[0]), c = cos(p.y[0]);
        k.s2 = s * s;
        k.c2 = c * c;
        const Dual& r = p.rho;
        k.Dr = k.q2 - 2 * M * r * k.q + a * a * r * r;
        k.Sr = k.q2 + a * a * r * r * k.c2;
        k.dtt = (2 * M * r * k.q + 2 * M * a * a * r * r * r * k.q * k.s2 / k.Sr) / k.Dr;
        k.drr = (2 * M * k.q * r - a * a * k.s2 * r * r) / k.Sr;
        k.gtphi_r3 = 2 * M * a * k.q / (k.Sr * k.Dr);
        return k;
    };
    auto add = [&](Slot sl, int i, int j, ScalarFn f, std::vector<Monomial> van) {
        mdl.remainders.push_back({sl, i, j, std::move(f), std::move(van)});
    };
    add(Slot::rr, 0, 0, [kerr](const BasePointD& p) { return kerr(p).dtt; }, {{1, 0}});
    add(Slot::rv, 0, 0, [kerr](const BasePointD& p) {
        auto k = kerr(p);
        return -2.0 * k.q2 * k.dtt;
    }, {{1, 0}});
    add(Slot::vv, 0, 0, [kerr, M](const BasePointD& p) {
        auto k = kerr(p);
        return 4.0 * k.q2 * k.q2 * k.dtt + 4.0 * k.q2 * k.drr - 16.0 * M * p.rho;
    }, {{2, 0}, {1, 1}});
    if (a != 0) {
        add(Slot::ry, 1, 0, [kerr](const BasePointD& p) {
            auto k = kerr(p);
            return -k.gtphi_r3 * p.rho * p.rho;
        }, {{2, 0}});
        add(Slot::vy, 1, 0, [kerr](const BasePointD& p) {
            auto k = kerr(p);
            return 2.0 * k.q2 * k.gtphi_r3 * p.rho * p.rho;
        }, {{2, 0}});
        add(Slot::yy, 0, 0, [kerr, a](const BasePointD& p) {
            auto k = kerr(p);
            return a * a * p.rho * p.rho * k.c2 / (k.q2 * k.Sr);
        }, {{2, 0}});
        add(Slot::yy, 1, 1, [kerr, a, M](const BasePointD& p) {
            auto k = kerr(p);
            return a * a * p.rho * p.rho * (k.Sr - 2 * M * k.q * p.rho * k.c2) / (k.q2 * k.Sr * k.Dr * k.s2);
        }, {{2, 0}});
    }
    mdl.sample_y = [](const std::vector<double>& u) {
        return std::vector<double>{0.4 + (pi - 0.8) * u[0], 2 * pi * u[1]};
    };
    mdl.in_chart = [](const std::vector<double>& y) { return std::sin(y[0]) > 0.05; };
    mdl.v_max = 1.0;
    mdl.rho_max = 0.1 / M;  // r >= 10 M
    mdl.spec = {{"kind", "kerr"}, {"M", M}, {"a", a}};
    return mdl;
}

// Generic normal form with constant coefficients and monomial remainders coeff * rho^a v^b.
inline MetricModel make_normal_form(const json& j) {
    MetricModel mdl;
    mdl.n = j.value("n", 4);
    require(mdl.n >= 3 && mdl.n <= max_dim, cat("dimension n must be in [3, ", max_dim, "]"));
    const int k = mdl.n - 2;
    mdl.label = j.value("label", std::string("normal_form"));
    mdl.m = j.value("m", 0.0);
    double om = j.value("omega", 1.0), al = j.value("alpha", 2.0), be = j.value("beta", 4.0);
    std::vector<double> mu = j.value("mu", std::vector<double>(k, 0.0));
    std::vector<double> up = j.value("upsilon", std::vector<double>(k, 0.0));
    require(static_cast<int>(mu.size()) == k && static_cast<int>(up.size()) == k, "mu/upsilon length must be n-2");
    Mat h = Mat::Identity(k, k);
    if (j.contains("h_inv")) {
        auto rows = j.at("h_inv").get<std::vector<std::vector<double>>>();
        require(static_cast<int>(rows.size()) == k, "h_inv must be (n-2)x(n-2)");
        for (int r = 0; r < k; ++r) {
            require(static_cast<int>(rows[r].size()) == k, "h_inv must be (n-2)x(n-2)");
            for (int c = 0; c < k; ++c) h(r, c) = rows[r][c];
        }
    }
    require((h - h.transpose()).cwiseAbs().maxCoeff() == 0.0, "h_inv must be symmetric");
    mdl.omega = [om](const BasePointD& p) { return constant(om, p.rho.derivatives().size()); };
    mdl.alpha = [al](const BasePointD& p) { return constant(al, p.rho.derivatives().size()); };
    mdl.beta = [be](const BasePointD& p) { return constant(be, p.rho.derivatives().size()); };
    auto vec = [](std::vector<double> c) {
        return [c](const BasePointD& p) {
            std::vector<Dual> r;
            for (double x : c) r.push_back(constant(x, p.rho.derivatives().size()));
            return r;
        };
    };
    mdl.mu = vec(mu);
    mdl.upsilon = vec(up);
    mdl.h_inv = [h](const BasePointD& p) {
        const int nd = p.rho.derivatives().size();
        DMat r(h.rows(), h.cols());
        for (Eigen::Index i = 0; i < h.rows(); ++i)
            for (Eigen::Index c = 0; c < h.cols(); ++c) r(i, c) = constant(h(i, c), nd);
        return r;
    };
    for (const auto& rj : j.value("remainders", json::array())) {
        Remainder r;
        r.slot = slot_from_name(rj.at("slot").get<std::string>());
        r.i = rj.value("i", 0);
        r.j = rj.value("j", 0);
        require(r.i >= 0 && r.i < k && r.j >= 0 && r.j < k, "remainder angular index out of range");
        if (r.slot == Slot::yy && r.j < r.i) std::swap(r.i, r.j);
        int ap = rj.value("rho_power", 1), bp = rj.value("v_power", 0);
        require(ap >= 0 && bp >= 0 && ap + bp >= 1, "remainder must vanish at rho = v = 0");
        double c = rj.value("coeff", 0.0);
        r.f = [c, ap, bp](const BasePointD& p) { return c * detail::ipow(p.rho, ap) * detail::ipow(p.v, bp); };
        r.vanishing = {{ap, bp}};
        mdl.remainders.push_back(r);
    }
    mdl.sample_y = [](const std::vector<double>& u) { return detail::box_sample(u, 1.0); };
    mdl.in_chart = nullptr;
    mdl.v_max = j.value("v_max", 1.0);
    mdl.rho_max = j.value("rho_max", 0.1);
    mdl.spec = j;
    mdl.spec["kind"] = "normal_form";
    return mdl;
}

inline MetricModel make_model(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "minkowski") return make_minkowski(j.value("n", 4));
    if (kind == "kerr") return make_kerr_exterior(j.at("M").get<double>(), j.value("a", 0.0));
    if (kind == "schwarzschild") return make_kerr_exterior(j.at("M").get<double>(), 0.0);
    if (kind == "normal_form") return make_normal_form(j);
    throw std::invalid_argument("unknown model kind '" + kind + "'");
}

inline json to_json(const MetricModel& mdl) { return mdl.spec; }

// ---------- Boyer-Lindquist route (independent of the inverse-metric formulas above) ----------

// Covariant Kerr metric in (t, r, theta, phi), signature (+,-,-,-).
inline Eigen::Matrix4d kerr_bl_metric(double M, double a, double r, double th) {
    double s2 = std::sin(th) * std::sin(th), c2 = std::cos(th) * std::cos(th);
    double Sig = r * r + a * a * c2, Del = r * r - 2 * M * r + a * a;
    Eigen::Matrix4d g = Eigen::Matrix4d::Zero();
    g(0, 0) = 1 - 2 * M * r / Sig;
    g(0, 3) = g(3, 0) = 2 * M * a * r * s2 / Sig;
    g(1, 1) = -Sig / Del;
    g(2, 2) = -Sig;
    g(3, 3) = -(r * r + a * a + 2 * M * a * a * r * s2 / Sig) * s2;
    return g;
}

// sc-frame dual metric obtained by numerically inverting the BL metric and pulling back.
inline Mat bl_dual_metric(double M, double a, const BasePoint& p) {
    require(p.rho > 0 && p.v < 1 && p.y.size() == 2, "BL route needs rho > 0, v < 1, (theta, phi)");
    double t = 1 / p.rho, q = std::sqrt(1 - p.v), r = q * t;
    Eigen::Matrix4d ginv = kerr_bl_metric(M, a, r, p.y[0]).inverse();
    // d(rho, v, theta, phi) / d(t, r, theta, phi)
    Eigen::Matrix4d J = Eigen::Matrix4d::Zero();
    J(0, 0) = -p.rho * p.rho;
    J(1, 0) = 2 * r * r / (t * t * t);
    J(1, 1) = -2 * r / (t * t);
    J(2, 2) = 1;
    J(3, 3) = 1;
    Eigen::Matrix4d Gc = J * ginv * J.transpose();
    Eigen::Vector4d s(1 / (p.rho * p.rho), 1 / p.rho, 1 / p.rho, 1 / p.rho);
    return s.asDiagonal() * Gc * s.asDiagonal();
}

// ---------- constants and validation ----------

struct NormalFormConstants {
    double omega = 0, alpha = 0, beta = 0, m = 0;
};

inline NormalFormConstants extract_normal_form_constants(const MetricModel& mdl, const std::vector<double>& y) {
    BasePoint c{0, 0, y};
    detail::check_base(mdl, c);
    DMat G = dual_metric_matrix(mdl, seed(c));
    NormalFormConstants k;
    k.omega = G(0, 0).value();
    k.alpha = G(0, 1).derivatives()(1);
    k.m = G(1, 1).derivatives()(0) / 4;
    // beta = (1/2) d^2 g^{vv}/dv^2: Richardson on central differences of the exact first derivative
    auto d1 = [&](double v) { return dual_metric_matrix(mdl, seed(BasePoint{0, v, y}))(1, 1).derivatives()(1); };
    auto cd = [&](double h) { return (d1(h) - d1(-h)) / (2 * h); };
    double h = 1e-3;
    k.beta = 0.5 * (4 * cd(h / 2) - cd(h)) / 3;
    return k;
}

// Limits at rho = v = 0 computed from the BL route by polynomial extrapolation in rho.
inline NormalFormConstants bl_normal_form_constants(double M, double a, double theta = 1.1) {
    const int L = 6;
    auto G = [&](double rho, double v) { return bl_dual_metric(M, a, BasePoint{rho, v, {theta, 0.3}}); };
    auto extrap = [&](auto f) {
        // Neville extrapolation to rho -> 0 from rho_k = h 2^{-k}
        std::vector<double> x(L), T(L);
        for (int i = 0; i < L; ++i) {
            x[i] = 2e-3 / std::pow(2.0, i);
            T[i] = f(x[i]);
        }
        for (int j = 1; j < L; ++j)
            for (int i = L - 1; i >= j; --i) T[i] = (x[i - j] * T[i] - x[i] * T[i - 1]) / (x[i - j] - x[i]);
        return T[L - 1];
    };
    NormalFormConstants k;
    // the rho -> 0 limits are exactly polynomial in v, so a wide stencil costs nothing
    double hv = 0.1;
    k.omega = extrap([&](double r) { return G(r, 0)(0, 0); });
    k.alpha = extrap([&](double r) { return (G(r, hv)(0, 1) - G(r, -hv)(0, 1)) / (2 * hv); });
    k.m = extrap([&](double r) { return G(r, 0)(1, 1) / (4 * r); });
    k.beta = extrap([&](double r) { return (G(r, hv)(1, 1) - 2 * G(r, 0)(1, 1) + G(r, -hv)(1, 1)) / (2 * hv * hv); });
    return k;
}

struct SampleSet {
    std::vector<BasePoint> points;
};

inline SampleSet default_samples(const MetricModel& mdl, int count = 64) {
    SampleSet s;
    for (int i = 0; i < count; ++i) {
        auto u = kronecker_point(i, mdl.n);
        double rho = mdl.rho_max * std::pow(10.0, -3 * u[0]);
        double v = 0.4 * (2 * u[1] - 1);
        std::vector<double> uy(u.begin() + 2, u.end());
        s.points.push_back({rho, v, mdl.sample_y(uy)});
    }
    return s;
}

inline std::vector<CheckResult> validate_model(const MetricModel& mdl, const SampleSet& samples,
                                               double remainder_bound = 1e3) {
    require(!samples.points.empty(), "validate_model needs a nonempty sample set");
    std::vector<CheckResult> out;
    const int n = mdl.n, k = n - 2;

    CheckResult spd{"h_inv positive definite", true, std::numeric_limits<double>::infinity(), 0, ""};
    CheckResult sig{"Lorentzian signature (+,-,...,-)", true, 0, 0, ""};
    for (const auto& p : samples.points) {
        Mat h = values(mdl.h_inv(seed(p)));
        Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (h + h.transpose()));
        Eigen::LLT<Mat> llt(h);
        double mn = es.eigenvalues().minCoeff();
        spd.worst = std::min(spd.worst, mn);
        if (llt.info() != Eigen::Success || !(mn > 0)) {
            spd.pass = false;
            spd.detail = cat("fails at rho=", p.rho, " v=", p.v);
        }
        if (p.rho > 0) {
            Eigen::SelfAdjointEigenSolver<Mat> eg(dual_metric_matrix(mdl, p));
            auto ev = eg.eigenvalues();
            int pos = 0, neg = 0;
            for (int i = 0; i < n; ++i) (ev(i) > 0 ? pos : neg)++;
            if (pos != 1 || neg != n - 1) {
                sig.pass = false;
                sig.detail = cat("signature (", pos, ",", neg, ") at rho=", p.rho, " v=", p.v);
            }
            double gap = std::min(ev(n - 1), -ev(n - 2));
            sig.worst = sig.worst == 0 ? gap : std::min(sig.worst, gap);
        }
    }
    out.push_back(spd);
    out.push_back(sig);

    CheckResult corner{"corner values g^{rv}=-2, g^{vv}=0, g^{rr}=omega", true, 0, 1e-12, ""};
    for (int i = 0; i < 8; ++i) {
        std::vector<double> u = kronecker_point(1000 + i, k);
        BasePoint c{0, 0, mdl.sample_y(u)};
        Mat G = dual_metric_matrix(mdl, c);
        double om = mdl.omega(seed(c)).value();
        double e = std::max({std::fabs(G(0, 1) + 2), std::fabs(G(1, 1)), std::fabs(G(0, 0) - om)});
        corner.worst = std::max(corner.worst, e);
    }
    corner.pass = corner.worst <= corner.bound;
    out.push_back(corner);

    CheckResult rem{"remainders bounded by declared vanishing monomials", true, 0, remainder_bound, ""};
    const double dirs[][2] = {{1, 0}, {1, 0.5}, {1, -0.5}, {0.5, 1}, {0.2, -1}};
    for (const auto& r : mdl.remainders) {
        for (const auto& d : dirs) {
            for (int lev = 1; lev <= 24; ++lev) {
                double eps = mdl.rho_max * std::ldexp(1.0, -lev);
                std::vector<double> y = mdl.sample_y(kronecker_point(7, k));
                BasePoint p{eps * d[0], eps * d[1], y};
                double val = r.f(seed(p)).value(), den = 0;
                for (const auto& mo : r.vanishing)
                    den += std::pow(p.rho, mo.rho_pow) * std::pow(std::fabs(p.v), mo.v_pow);
                double ratio = den > 0 ? std::fabs(val) / den : (val == 0 ? 0 : INFINITY);
                if (ratio > rem.worst) {
                    rem.worst = ratio;
                    rem.detail = cat("slot ", slot_name(r.slot), " worst at rho=", p.rho, " v=", p.v);
                }
            }
        }
    }
    rem.pass = rem.worst <= rem.bound;
    out.push_back(rem);

    CheckResult eq{"b-symbol equals coordinate-frame quadratic form", true, 0, 1e-12, ""};
    CheckResult hom{"b-symbol homogeneous of degree 2", true, 0, 1e-12, ""};
    CheckResult mind{"d lambda / dm = 0 at rho = 0", true, 0, 1e-12, ""};
    int idx = 0;
    for (const auto& p : samples.points) {
        auto u = kronecker_point(5000 + idx++, n);
        CotangentPoint c{p.rho, p.v, p.y, 2 * u[0] - 1, 2 * u[1] - 1, {}};
        for (int j = 0; j < k; ++j) c.eta.push_back(2 * u[2 + j] - 1);
        double lam = b_symbol(mdl, c);
        double scale = std::max(1.0, c.fiber().squaredNorm());
        if (p.rho > 1e-3) eq.worst = std::max(eq.worst, std::fabs(lam - b_symbol_via_coordinates(mdl, c)) / scale);
        double t = 0.37 + 2.1 * u[0];
        CotangentPoint ct = c;
        ct.xi *= t;
        ct.gamma *= t;
        for (auto& e : ct.eta) e *= t;
        hom.worst = std::max(hom.worst, std::fabs(b_symbol(mdl, ct) - t * t * lam) / (t * t * scale));
        CotangentPoint c0 = c;
        c0.rho = 0;
        MetricModel mp = mdl, mm = mdl;
        mp.m += 1e-3;
        mm.m -= 1e-3;
        mind.worst = std::max(mind.worst, std::fabs(b_symbol(mp, c0) - b_symbol(mm, c0)) / 2e-3);
    }
    eq.pass = eq.worst <= eq.bound;
    hom.pass = hom.worst <= hom.bound;
    mind.pass = mind.worst <= mind.bound;
    out.push_back(eq);
    out.push_back(hom);
    out.push_back(mind);
    return out;
}

}  // namespace lrs
