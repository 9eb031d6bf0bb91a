#pragma once

#include "indexsets.hpp"

namespace lrs {

// Plateau bump: 1 on |v| <= c1, 0 on |v| >= C, built from exp(-1/x).
class CutoffSpec {
public:
    CutoffSpec(double c1 = 0.25, double C = 0.75) : c1_(c1), C_(C) {
        require(0 < c1 && c1 < C, cat("cutoff needs 0 < c1 < C, got c1=", c1, " C=", C));
        for (int i = 0; i <= 4000; ++i) slope_ = std::max(slope_, std::fabs(deriv(c1_ + (C_ - c1_) * i / 4000.0)));
    }
    double c1() const { return c1_; }
    double C() const { return C_; }
    double max_slope() const { return slope_; }

    double operator()(double v) const {
        double a = std::fabs(v);
        if (a <= c1_) return 1;
        if (a >= C_) return 0;
        double t = (C_ - a) / (C_ - c1_), p = psi(t), q = psi(1 - t);
        return p / (p + q);
    }
    double deriv(double v) const {
        double a = std::fabs(v);
        if (a <= c1_ || a >= C_) return 0;
        double w = C_ - c1_, t = (C_ - a) / w;
        double p = psi(t), q = psi(1 - t), dp = p / (t * t), dq = q / ((1 - t) * (1 - t));
        double dchi_dt = (dp * q + p * dq) / ((p + q) * (p + q));
        return dchi_dt * (-1.0 / w) * (v < 0 ? -1.0 : 1.0);
    }

private:
    static double psi(double x) { return x > 0 ? std::exp(-1 / x) : 0.0; }
    double c1_, C_, slope_ = 0;
};

struct LogifiedPoint {
    double rho_bar = 0, v_bar = 0;
};

inline double rho_log_rho(double rho) { return rho > 0 ? rho * std::log(rho) : 0.0; }

// v_bar = v + chi(v) m rho log rho, rho_bar = rho
inline LogifiedPoint logify_point(double rho, double v, double m, const CutoffSpec& chi = {}) {
    if (!(rho >= 0)) throw std::domain_error(cat("logify_point needs rho >= 0, got ", rho));
    return {rho, v + chi(v) * m * rho_log_rho(rho)};
}

struct PlainPoint {
    double rho = 0, v = 0;
};

inline PlainPoint unlogify_point(double rho_bar, double v_bar, double m, const CutoffSpec& chi = {}) {
    if (!(rho_bar >= 0)) throw std::domain_error(cat("unlogify_point needs rho_bar >= 0, got ", rho_bar));
    const double k = m * rho_log_rho(rho_bar);
    if (k == 0) return {rho_bar, v_bar};
    if (!(std::fabs(k) * chi.max_slope() < 1))
        throw std::domain_error(cat("unlogify_point: v -> v_bar not monotone at rho_bar=", rho_bar, " (|m rho log rho| sup|chi'| = ",
                                    std::fabs(k) * chi.max_slope(), ")"));
    double v = v_bar - chi(v_bar) * k;
    for (int it = 0; it < 60; ++it) {
        double g = v + chi(v) * k - v_bar;
        if (std::fabs(g) <= 1e-14 * std::max(1.0, std::fabs(v_bar))) break;
        v -= g / (1 + chi.deriv(v) * k);
    }
    double res = std::fabs(v + chi(v) * k - v_bar);
    if (!(res <= 1e-12)) throw std::runtime_error(cat("unlogify_point: Newton residual ", res));
    return {rho_bar, v};
}

// Coordinates on the front face after blowing up {rho_bar = v_bar = 0}.
struct BlowupPoint {
    double s = 0, rho_bar = 0;
    std::vector<double> y;

    static BlowupPoint from_logified(double rho_bar, double v_bar, std::vector<double> y = {}) {
        require(rho_bar > 0, "blow-up coordinates need rho_bar > 0");
        return {v_bar / rho_bar, rho_bar, std::move(y)};
    }
    double v_bar() const { return s * rho_bar; }
    double varpi() const {
        require(s != 0, "varpi = 1/s needs s != 0");
        return 1 / s;
    }
};

enum class Generator { rho_drho, v_dv, rho_dv };

inline const char* generator_name(Generator g) {
    switch (g) {
        case Generator::rho_drho: return "rho d_rho";
        case Generator::v_dv: return "v d_v";
        case Generator::rho_dv: return "rho d_v";
    }
    return "?";
}

// Lift = a * rho_bar d_rho_bar + (b0 + b1 L + b2 L^2) d_s with L = log rho_bar
struct LiftCoefficients {
    double rho_drho = 0, ds = 0, L_ds = 0, L2_ds = 0;
};

using LiftFn = std::function<LiftCoefficients(double s, double rho_bar)>;

inline LiftFn lift_module_generator(Generator which, double m, CutoffSpec chi = {}) {
    return [which, m, chi](double s, double rb) {
        require(rb > 0, "lifts are evaluated at rho_bar > 0");
        // chi and chi' are functions of the original v
        double v = unlogify_point(rb, s * rb, m, chi).v, c = chi(v), cp = chi.deriv(v);
        LiftCoefficients r;
        switch (which) {
            case Generator::rho_drho:
                r.rho_drho = 1;
                r.ds = c * m - s;
                r.L_ds = c * m;
                break;
            case Generator::v_dv:
                r.ds = s;
                r.L_ds = s * cp * m * rb - c * m;
                r.L2_ds = -c * cp * m * m * rb;
                break;
            case Generator::rho_dv:
                r.ds = 1;
                r.L_ds = cp * m * rb;
                break;
        }
        return r;
    };
}

// ---------- synthetic polyhomogeneous functions ----------

// a_{z,k}(x) with x the fiber variable (s or v)
using PhgCoefficient = std::function<cplx(const IndexEntry&, double x)>;

// rho^{iz} (log rho)^k
inline cplx phg_term(const Exponent& z, int k, double rho) {
    require(rho > 0, "polyhomogeneous terms need rho > 0");
    double L = std::log(rho);
    return std::exp(cplx(0, 1) * z.value() * L) * std::pow(L, k);
}

inline cplx synth_phg_point(const IndexSet& E, const PhgCoefficient& a, double rho, double x) {
    cplx sum = 0;
    for (const auto& e : E.entries()) {
        cplx c = a(e, x);
        if (c != cplx(0)) sum += c * phg_term(e.z, e.k, rho);
    }
    return sum;
}

// rows: rho samples, columns: x samples
inline Eigen::MatrixXcd synth_phg(const IndexSet& E, const PhgCoefficient& a, const std::vector<double>& rhos,
                                  const std::vector<double>& xs) {
    Eigen::MatrixXcd out(rhos.size(), xs.size());
    for (size_t i = 0; i < rhos.size(); ++i)
        for (size_t j = 0; j < xs.size(); ++j) out(i, j) = synth_phg_point(E, a, rhos[i], xs[j]);
    return out;
}

}  // namespace lrs
