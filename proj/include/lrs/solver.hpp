#pragma once

#include "coords.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <json.hpp>

namespace lrs {

// ---------- spherical reduction ----------

// psi = r u solves psi_tt - psi_{r* r*} + V psi = (1 - 2M/r) r f
struct RadialReduction {
    double M = 0;

    double r_min() const { return 2 * M * (1 + 1e-12); }
    void check_r(double r) const {
        if (!(r > r_min()) && M > 0) throw std::domain_error(cat("r = ", r, " is not outside the horizon r = 2M = ", 2 * M));
        if (!(r >= 0)) throw std::domain_error(cat("r = ", r, " must be >= 0"));
    }
    double potential(double r) const {
        check_r(r);
        return M > 0 ? (1 - 2 * M / r) * (2 * M / (r * r * r)) : 0.0;
    }
    double lapse(double r) const { return M > 0 ? 1 - 2 * M / r : 1.0; }
    double tortoise(double r) const {
        check_r(r);
        return M > 0 ? r + 2 * M * std::log(r / (2 * M) - 1) : r;
    }
    // Newton in x = log(r/2M - 1), where r* = 2M(1 + e^x) + 2M x is convex and increasing
    double log_excess(double rs) const {
        double x = rs > 4 * M ? std::log(rs / (2 * M) - 1) : (rs - 2 * M) / (2 * M);
        double f = 0;
        for (int i = 0; i < 200; ++i) {
            double ex = std::exp(x);
            f = 2 * M * (1 + ex) + 2 * M * x - rs;
            double dx = f / (2 * M * (ex + 1));
            x -= dx;
            if (std::fabs(dx) < 1e-15 * (1 + std::fabs(x))) break;
        }
        f = 2 * M * (1 + std::exp(x)) + 2 * M * x - rs;
        if (!(std::fabs(f) <= 1e-12 * std::max(1.0, std::fabs(rs)))) throw std::runtime_error(cat("tortoise inversion failed at r* = ", rs));
        return x;
    }
    double radius(double rs) const { return M == 0 ? rs : 2 * M * (1 + std::exp(log_excess(rs))); }

    // r, 1 - 2M/r and V at a given r*; stays accurate where r rounds to 2M
    struct Sample {
        double r, lapse, V;
    };
    Sample at_rstar(double rs) const {
        if (M == 0) return {rs, 1.0, 0.0};
        double x = log_excess(rs), ex = std::exp(x), r = 2 * M * (1 + ex), f = ex / (1 + ex);
        return {r, f, f * 2 * M / (r * r * r)};
    }
};

inline RadialReduction reduce_radial(double M) {
    require(M >= 0 && std::isfinite(M), cat("reduce_radial needs M >= 0, got ", M));
    return {M};
}

// ---------- source and grid ----------

struct SourceSpec {
    double amplitude = 1, t0 = 5, sigma_t = 1, r0 = 10, width_r = 2;
    double t_cut = 9;  // g is set to zero for |t - t0| > t_cut sigma_t

    static double bump(double x) { return std::fabs(x) < 1 ? std::exp(1 - 1 / (1 - x * x)) : 0.0; }
    double g(double t) const {
        double z = (t - t0) / sigma_t;
        return std::fabs(z) <= t_cut ? amplitude * std::exp(-0.5 * z * z) : 0.0;
    }
    double radial(double r) const { return bump((r - r0) / width_r); }
    double f(double t, double r) const { return g(t) * radial(r); }
    double t_begin() const { return t0 - t_cut * sigma_t; }
    double t_end() const { return t0 + t_cut * sigma_t; }
    double r_begin() const { return r0 - width_r; }
    double r_end() const { return r0 + width_r; }
};

struct GridSpec {
    double dr = 0.05;          // spacing in r*
    double cfl = 1.0;          // dt / dr
    double t_start = -5;       // initial slice, before the source switches on
    double u_window = 60;      // keep retarded times t - r* <= u_window
    double rstar_inner = -60;  // inner edge in r* for M > 0
    double blowup_bound = 1e8;  // instability detector, in units of the source amplitude
    int check_every = 1000;
};

inline void validate_setup(const RadialReduction& red, const SourceSpec& src, const GridSpec& g) {
    if (!(g.dr > 0)) throw std::invalid_argument(cat("grid spacing must be > 0, got ", g.dr));
    if (g.cfl > 1) throw std::invalid_argument(cat("CFL violation: dt/dr = ", g.cfl, " > 1"));
    if (g.cfl != 1) throw std::invalid_argument("the light-speed moving window needs dt = dr (cfl = 1)");
    if (!(src.sigma_t > 0 && src.width_r > 0)) throw std::invalid_argument("source widths must be > 0");
    if (!(src.t_begin() > g.t_start))
        throw std::invalid_argument(cat("source switches on at t = ", src.t_begin(), ", not after the initial slice t = ", g.t_start));
    double inner_r = red.M > 0 ? red.radius(g.rstar_inner) : 0.0;
    if (!(src.r_begin() > inner_r) || (red.M > 0 && !(src.r_begin() > 2 * red.M)))
        throw std::invalid_argument(cat("source support r >= ", src.r_begin(), " must lie inside the domain r > ", inner_r));
    if (red.M > 0 && !(g.rstar_inner < red.tortoise(src.r_begin())))
        throw std::invalid_argument("inner edge must lie below the source support");
}

// ---------- solution storage ----------

struct TimeLevel {
    long n = 0;
    double t = 0;
    long j_left = 0;  // absolute r* index of psi[0]
    std::vector<double> psi;
};

struct SolutionGrid {
    std::string label;
    double M = 0, dr = 0, dt = 0, t_start = 0, rstar0 = 0;  // r*_j = rstar0 + j dr
    double u_window = 0;
    long steps = 0;
    double max_abs = 0;
    std::vector<TimeLevel> levels;

    double rstar(long j) const { return rstar0 + j * dr; }

    const TimeLevel& level_at(double t) const {
        for (const auto& l : levels)
            if (std::fabs(l.t - t) <= 0.5 * dt) return l;
        throw std::out_of_range(cat("no stored time level at t = ", t));
    }

    // 8-point Lagrange interpolation in r*; outside the stored window is an error
    double psi_at(const TimeLevel& lv, double rs) const {
        double off = (rs - rstar(lv.j_left)) / dr;
        long fl = static_cast<long>(std::floor(off));
        long j0 = fl - 3;
        const long size = static_cast<long>(lv.psi.size());
        if (j0 < 0 || j0 + 7 >= size) {
            // exact grid points at the very edge need no stencil
            long jn = std::lround(off);
            if (std::fabs(off - jn) < 1e-9 && jn >= 0 && jn < size) return lv.psi[jn];
            throw std::out_of_range(cat("r* = ", rs, " at t = ", lv.t, " is outside the computed window [", rstar(lv.j_left), ", ",
                                        rstar(lv.j_left + size - 1), "]"));
        }
        double fr = off - fl + 3, s = 0;
        for (int p = 0; p < 8; ++p) {
            double L = 1;
            for (int q = 0; q < 8; ++q)
                if (q != p) L *= (fr - q) / double(p - q);
            s += L * lv.psi[j0 + p];
        }
        return s;
    }
};

// ---------- time stepping ----------

// Leapfrog at dt = dr with the potential averaged over levels n+1, n-1. The window follows light:
// one point is added on the right each step, and once t - r*_left exceeds u_window the left edge
// drops one point per step (exact for this stencil, no boundary condition needed there).
inline SolutionGrid solve_forward(const RadialReduction& red, const SourceSpec& src, const GridSpec& grid,
                                  std::vector<double> save_times) {
    validate_setup(red, src, grid);
    const double D = grid.dr, M = red.M;
    SolutionGrid sol;
    sol.label = M > 0 ? cat("schwarzschild M=", M) : "minkowski";
    sol.M = M;
    sol.dr = sol.dt = D;
    sol.t_start = grid.t_start;
    sol.rstar0 = M > 0 ? grid.rstar_inner : 0.0;
    sol.u_window = grid.u_window;
    std::sort(save_times.begin(), save_times.end());
    std::vector<long> save_n;
    for (double t : save_times) {
        if (!(t >= grid.t_start)) throw std::invalid_argument(cat("save time ", t, " precedes the initial slice"));
        long n = std::lround((t - grid.t_start) / D);
        if (save_n.empty() || save_n.back() != n) save_n.push_back(n);
    }
    const long n_end = save_n.empty() ? 0 : save_n.back();
    sol.steps = n_end;

    long jl = 0, jr = std::lround((red.tortoise(src.r_end()) - sol.rstar0) / D) + 4;
    // window storage with a sliding base; compacted when the left edge has moved far enough
    long base = 0;
    std::vector<double> P, C, N, V, B;
    auto ensure = [&](long j) {
        long need = j - base + 2;
        if (need > static_cast<long>(C.size())) {
            long cap = std::max<long>(need, 2 * static_cast<long>(C.size()) + 64);
            for (auto* v : {&P, &C, &N}) v->resize(cap, 0.0);
            long old = static_cast<long>(V.size());
            V.resize(cap);
            B.resize(cap);
            for (long i = old; i < cap; ++i) {
                auto p = red.at_rstar(sol.rstar(base + i));
                V[i] = p.V;
                B[i] = p.lapse * p.r * src.radial(p.r);
            }
        }
    };
    auto compact = [&]() {
        long shift = jl - 1 - base;
        if (shift < 4096 || shift < static_cast<long>(C.size()) / 2) return;
        for (auto* v : {&P, &C, &N, &V, &B}) v->erase(v->begin(), v->begin() + shift);
        base += shift;
        ensure(jr + 2);
    };
    ensure(jr + 2);
    // integer form of floor((t_{n+1} - r*_0 - u_window)/dr) keeps the drop schedule monotone
    const long drop_offset = static_cast<long>(std::floor((grid.t_start - sol.rstar0 - grid.u_window) / D + 1e-9));
    const double bound = grid.blowup_bound * std::max(1.0, std::fabs(src.amplitude));
    size_t next_save = 0;
    auto save = [&](long n) {
        TimeLevel lv;
        lv.n = n;
        lv.t = grid.t_start + n * D;
        lv.j_left = jl;
        lv.psi.assign(C.begin() + (jl - base), C.begin() + (jr - base) + 1);
        sol.levels.push_back(std::move(lv));
    };
    while (next_save < save_n.size() && save_n[next_save] == 0) save(save_n[next_save++]);
    // psi = 0 at n = 0 and n = 1 (source is off before t_start + dt)
    if (n_end >= 1)
        while (next_save < save_n.size() && save_n[next_save] == 1) save(save_n[next_save++]);
    for (long n = 1; n < n_end; ++n) {
        const double t = grid.t_start + n * D;
        const long jr_new = jr + 1;
        ensure(jr_new + 2);
        const long want_l = n + 1 + drop_offset;
        const bool drop = want_l > jl;
        const long jl_new = drop ? jl + 1 : jl;
        const double g = src.g(t), DD = D * D;
        for (long j = jl_new; j <= jr_new; ++j) {
            const long i = j - base;
            double val;
            if (j == jl_new && !drop)
                val = M == 0 ? 0.0 : C[i + 1];  // r = 0 regularity, or ingoing at the inner edge
            else {
                const double a = 0.5 * DD * V[i];
                val = (C[i + 1] + C[i - 1] - P[i] * (1 + a) + DD * g * B[i]) / (1 + a);
            }
            N[i] = val;
        }
        std::swap(P, C);
        std::swap(C, N);
        jl = jl_new;
        jr = jr_new;
        // values left of the window are stale; zero the slot that just left so reuse stays clean
        if (drop) C[jl - 1 - base] = P[jl - 1 - base] = 0.0;
        if (n % grid.check_every == 0 || n + 1 == n_end) {
            double mx = 0;
            for (long j = jl; j <= jr; ++j) mx = std::max(mx, std::fabs(C[j - base]));
            if (!std::isfinite(mx) || mx > bound)
                throw std::runtime_error(cat("instability detected at t = ", t + D, ": max |psi| = ", mx));
            sol.max_abs = std::max(sol.max_abs, mx);
        }
        while (next_save < save_n.size() && save_n[next_save] == n + 1) save(save_n[next_save++]);
        compact();
    }
    return sol;
}

// ---------- Minkowski oracle ----------

// psi(t, r) = (1/2) int g(t') [H(r + t - t') - H(r - t + t')] dt', H even with H' = odd extension of r b(r)
class MinkowskiOracle {
public:
    explicit MinkowskiOracle(SourceSpec src, double t_start = -5, double tol = 1e-12) : src_(src), t_start_(t_start), tol_(tol) {
        // cumulative table of H on a fine grid; each query adds one short Gauss panel
        const int n = 4096;
        h_ = (src_.r_end() - src_.r_begin()) / n;
        table_.assign(n + 1, 0.0);
        for (int i = 0; i < n; ++i) table_[i + 1] = table_[i] + panel(src_.r_begin() + i * h_, src_.r_begin() + (i + 1) * h_);
    }

    double H(double x) const {
        double y = std::min(std::fabs(x), src_.r_end());
        if (y <= src_.r_begin()) return 0.0;
        long i = std::min<long>(static_cast<long>((y - src_.r_begin()) / h_), static_cast<long>(table_.size()) - 1);
        double a = src_.r_begin() + i * h_;
        return table_[i] + (y > a ? panel(a, y) : 0.0);
    }

    double psi(double t, double r) const {
        double a = std::max(src_.t_begin(), t_start_), b = std::min(src_.t_end(), t);
        if (!(b > a)) return 0.0;
        using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
        // kinks of the integrand where r +- (t - t') crosses the support edges
        std::vector<double> cuts = {a, b};
        for (double e : {src_.r_begin(), src_.r_end()})
            for (double c : {t + r - e, t - r - e, t - r + e, t + r + e})
                if (c > a && c < b) cuts.push_back(c);
        std::sort(cuts.begin(), cuts.end());
        double s = 0;
        for (size_t i = 0; i + 1 < cuts.size(); ++i) {
            if (cuts[i + 1] - cuts[i] < 1e-14) continue;
            s += GK::integrate([&](double tp) { return src_.g(tp) * (H(r + t - tp) - H(r - t + tp)); }, cuts[i], cuts[i + 1], 15, tol_);
        }
        return 0.5 * s;
    }

    double u(double t, double r) const {
        require(r > 0, "u = psi / r needs r > 0");
        return psi(t, r) / r;
    }

private:
    double panel(double a, double b) const {
        return boost::math::quadrature::gauss<double, 20>::integrate([&](double r) { return r * src_.radial(r); }, a, b);
    }

    SourceSpec src_;
    double t_start_, tol_;
    double h_ = 0;
    std::vector<double> table_;
};

inline std::vector<double> exact_minkowski_oracle(const SourceSpec& src, const std::vector<std::pair<double, double>>& tr,
                                                  double t_start = -5) {
    MinkowskiOracle o(src, t_start);
    std::vector<double> out(tr.size());
    parallel_for(static_cast<int>(tr.size()), [&](int i) { out[i] = o.u(tr[i].first, tr[i].second); });
    return out;
}

// ---------- null slices ----------

enum class ExtractionChart { normal_form, tortoise };

inline const char* chart_name(ExtractionChart c) { return c == ExtractionChart::normal_form ? "normal-form" : "tortoise"; }

inline ExtractionChart parse_chart(const std::string& s) {
    if (s == "normal-form" || s == "normal_form") return ExtractionChart::normal_form;
    if (s == "tortoise") return ExtractionChart::tortoise;
    throw std::invalid_argument(cat("unknown extraction chart '", s, "'"));
}

// rho_k = rho0 2^{-k/q} down to rho_min
struct RhoSchedule {
    double rho0 = 3.2e-5, rho_min = 1e-6;
    int per_octave = 6;

    std::vector<double> values() const {
        require(rho0 > 0 && rho_min > 0 && rho_min <= rho0 && per_octave >= 1, "bad rho schedule");
        std::vector<double> out;
        for (int k = 0;; ++k) {
            double r = rho0 * std::pow(2.0, -double(k) / per_octave);
            if (r < rho_min * (1 - 1e-12)) break;
            out.push_back(r);
        }
        return out;
    }
    // time levels to store: t = 1/rho
    std::vector<double> times() const {
        auto v = values();
        std::vector<double> t;
        for (double r : v) t.push_back(1 / r);
        return t;
    }
};

// Normal-form chart: rho = 1/t, v0 = 2(1 - r/t), v = v0 - v0^2/4, v_bar = v + chi(v) m rho log rho, s = v_bar/rho, w = t psi / r.
// Tortoise chart: s = 2(t - r*), rho = 1/r, w = psi.
inline std::vector<NullSlice> extract_null_slices(const SolutionGrid& sol, const std::vector<double>& s_values,
                                                  const std::vector<double>& level_times,
                                                  ExtractionChart chart = ExtractionChart::normal_form, CutoffSpec chi = {}) {
    auto red = reduce_radial(sol.M);
    const double m = 4 * sol.M;
    std::vector<const TimeLevel*> lv;
    for (double t : level_times) lv.push_back(&sol.level_at(t));
    std::sort(lv.begin(), lv.end(), [](auto a, auto b) { return a->t < b->t; });
    std::vector<NullSlice> out(s_values.size());
    std::vector<std::string> errors(s_values.size());
    parallel_for(static_cast<int>(s_values.size()), [&](int i) {
        NullSlice sl;
        sl.s = s_values[i];
        try {
            for (const TimeLevel* l : lv) {
                const double t = l->t;
                double r, rho, w;
                if (chart == ExtractionChart::normal_form) {
                    rho = 1 / t;
                    double v = unlogify_point(rho, sl.s * rho, m, chi).v;
                    if (!(v < 1)) throw std::out_of_range(cat("s = ", sl.s, " leaves the chart at t = ", t));
                    double v0 = 2 * v / (1 + std::sqrt(1 - v));
                    r = t * (1 - v0 / 2);
                    w = t * sol.psi_at(*l, red.tortoise(r)) / r;
                } else {
                    double rs = t - sl.s / 2;
                    r = red.radius(rs);
                    rho = 1 / r;
                    w = sol.psi_at(*l, rs);
                }
                sl.rho.push_back(rho);
                sl.w.push_back(w);
            }
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
        out[i] = std::move(sl);
    });
    for (const auto& e : errors)
        if (!e.empty()) throw std::out_of_range(cat("extraction outside the computed domain: ", e));
    return out;
}

inline std::vector<double> s_grid(double s_min, double s_max, double ds) {
    require(ds > 0 && s_max >= s_min, "bad s grid");
    std::vector<double> s;
    const long n = std::lround((s_max - s_min) / ds);
    for (long i = 0; i <= n; ++i) s.push_back(s_min + i * ds);
    return s;
}

inline std::string slices_csv(const std::vector<NullSlice>& slices, ExtractionChart chart) {
    std::ostringstream os;
    os.precision(17);
    os << "# chart=" << chart_name(chart) << "\n";
    os << "s,rho,w\n";
    for (const auto& sl : slices)
        for (size_t k = 0; k < sl.rho.size(); ++k) os << sl.s << "," << sl.rho[k] << "," << sl.w[k] << "\n";
    return os.str();
}

// inverse of slices_csv; rows of one s must be contiguous
inline std::pair<std::vector<NullSlice>, ExtractionChart> read_slices_csv(std::istream& in) {
    std::string line;
    ExtractionChart chart = ExtractionChart::normal_form;
    std::vector<NullSlice> out;
    bool header = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line.rfind("# chart=", 0) == 0) {
            chart = parse_chart(line.substr(8));
            continue;
        }
        if (line[0] == '#') continue;
        if (!header) {
            if (line != "s,rho,w") throw std::invalid_argument(cat("slice CSV header must be 's,rho,w', got '", line, "'"));
            header = true;
            continue;
        }
        double v[3];
        std::istringstream ls(line);
        std::string tok;
        for (int i = 0; i < 3; ++i) {
            if (!std::getline(ls, tok, ',')) throw std::invalid_argument(cat("bad slice CSV row '", line, "'"));
            v[i] = std::stod(tok);
        }
        if (out.empty() || out.back().s != v[0]) out.push_back(NullSlice{v[0], {}, {}});
        out.back().rho.push_back(v[1]);
        out.back().w.push_back(v[2]);
    }
    if (!header) throw std::invalid_argument("slice CSV is empty");
    return {out, chart};
}

// ---------- checkpoints ----------

// <path>.bin holds the psi arrays of all levels back to back (little-endian doubles); <path>.json describes them.
inline void write_checkpoint(const SolutionGrid& sol, const std::filesystem::path& stem, const std::string& run_id) {
    nlohmann::json meta;
    meta["format"] = "lrs-solution-1";
    meta["label"] = sol.label;
    meta["run_id"] = run_id;
    meta["M"] = sol.M;
    meta["dr"] = sol.dr;
    meta["dt"] = sol.dt;
    meta["t_start"] = sol.t_start;
    meta["rstar0"] = sol.rstar0;
    meta["u_window"] = sol.u_window;
    meta["steps"] = sol.steps;
    meta["max_abs"] = sol.max_abs;
    meta["levels"] = nlohmann::json::array();
    std::ofstream bin(stem.string() + ".bin", std::ios::binary);
    if (!bin) throw std::runtime_error(cat("cannot write ", stem.string(), ".bin"));
    std::uint64_t offset = 0;
    for (const auto& l : sol.levels) {
        meta["levels"].push_back({{"n", l.n}, {"t", l.t}, {"j_left", l.j_left}, {"size", l.psi.size()}, {"offset", offset}});
        bin.write(reinterpret_cast<const char*>(l.psi.data()), static_cast<std::streamsize>(l.psi.size() * sizeof(double)));
        offset += l.psi.size();
    }
    std::ofstream js(stem.string() + ".json");
    js << meta.dump(2) << "\n";
}

inline SolutionGrid read_checkpoint(const std::filesystem::path& stem) {
    std::ifstream js(stem.string() + ".json");
    if (!js) throw std::runtime_error(cat("cannot read ", stem.string(), ".json"));
    auto meta = nlohmann::json::parse(js);
    if (meta.value("format", "") != "lrs-solution-1") throw std::runtime_error("unknown checkpoint format");
    SolutionGrid sol;
    sol.label = meta["label"];
    sol.M = meta["M"];
    sol.dr = meta["dr"];
    sol.dt = meta["dt"];
    sol.t_start = meta["t_start"];
    sol.rstar0 = meta["rstar0"];
    sol.u_window = meta["u_window"];
    sol.steps = meta["steps"];
    sol.max_abs = meta["max_abs"];
    std::ifstream bin(stem.string() + ".bin", std::ios::binary);
    if (!bin) throw std::runtime_error(cat("cannot read ", stem.string(), ".bin"));
    for (const auto& l : meta["levels"]) {
        TimeLevel lv;
        lv.n = l["n"];
        lv.t = l["t"];
        lv.j_left = l["j_left"];
        lv.psi.resize(l["size"].get<size_t>());
        bin.seekg(static_cast<std::streamoff>(l["offset"].get<std::uint64_t>() * sizeof(double)));
        bin.read(reinterpret_cast<char*>(lv.psi.data()), static_cast<std::streamsize>(lv.psi.size() * sizeof(double)));
        if (!bin) throw std::runtime_error("truncated checkpoint data");
        sol.levels.push_back(std::move(lv));
    }
    return sol;
}

// ---------- convergence study ----------

struct ConvergenceReport {
    std::vector<double> spacings, errors, orders;  // relative L-infinity error at each spacing
    double t_eval = 0;
    double min_order() const { return orders.empty() ? 0.0 : *std::min_element(orders.begin(), orders.end()); }
};

// Minkowski solver against the oracle at time t_eval on the r-points of the coarsest grid.
inline ConvergenceReport minkowski_convergence(const SourceSpec& src, GridSpec grid, std::vector<double> spacings,
                                               double t_eval = 30) {
    require(spacings.size() >= 2, "need >= 2 spacings");
    std::sort(spacings.rbegin(), spacings.rend());
    ConvergenceReport rep;
    rep.t_eval = t_eval;
    rep.spacings = spacings;
    const double coarse = spacings.front();
    std::vector<double> rs;
    for (long j = 1;; ++j) {
        double r = j * coarse;
        if (r > t_eval - src.t_begin() + src.r_end() + 0.5) break;  // past the domain of influence psi is 0
        rs.push_back(r);
    }
    std::vector<std::pair<double, double>> pts;
    for (double r : rs) pts.emplace_back(t_eval, r);
    MinkowskiOracle oracle(src, grid.t_start);
    std::vector<double> exact(rs.size());
    parallel_for(static_cast<int>(rs.size()), [&](int i) { exact[i] = oracle.psi(t_eval, rs[i]); });
    double scale = 0;
    for (double e : exact) scale = std::max(scale, std::fabs(e));
    require(scale > 0, "oracle solution vanishes at t_eval");
    for (double h : spacings) {
        grid.dr = h;
        auto sol = solve_forward(reduce_radial(0), src, grid, {t_eval});
        const auto& lv = sol.level_at(t_eval);
        double err = 0;
        for (size_t i = 0; i < rs.size(); ++i) err = std::max(err, std::fabs(sol.psi_at(lv, rs[i]) - exact[i]));
        rep.errors.push_back(err / scale);
    }
    for (size_t i = 0; i + 1 < spacings.size(); ++i)
        rep.orders.push_back(std::log(rep.errors[i] / rep.errors[i + 1]) / std::log(spacings[i] / spacings[i + 1]));
    return rep;
}

}  // namespace lrs
