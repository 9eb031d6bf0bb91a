#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/AutoDiff>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <exception>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace lrs {

inline constexpr const char* version = "0.3.0";
inline constexpr int max_dim = 8;
inline constexpr double pi = 3.14159265358979323846;

using cplx = std::complex<double>;
using DerivVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, max_dim, 1>;
using Dual = Eigen::AutoDiffScalar<DerivVec>;
using DMat = Eigen::Matrix<Dual, Eigen::Dynamic, Eigen::Dynamic>;
using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// (rho, v, y) with gradient seeds; base coordinate index order is rho, v, y_0, ...
struct BasePointD {
    Dual rho, v;
    std::vector<Dual> y;
};

struct BasePoint {
    double rho = 0, v = 0;
    std::vector<double> y;
};

inline Dual constant(double x, int n) { return Dual(x, DerivVec::Zero(n)); }

inline BasePointD seed(const BasePoint& p) {
    const int n = 2 + static_cast<int>(p.y.size());
    BasePointD d;
    d.rho = Dual(p.rho, n, 0);
    d.v = Dual(p.v, n, 1);
    for (size_t j = 0; j < p.y.size(); ++j) d.y.emplace_back(p.y[j], n, 2 + static_cast<int>(j));
    return d;
}

inline Mat values(const DMat& a) {
    Mat r(a.rows(), a.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j) r(i, j) = a(i, j).value();
    return r;
}

template <class... Args>
std::string cat(Args&&... args) {
    std::ostringstream os;
    os.precision(17);
    (os << ... << args);
    return os.str();
}

inline void require(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument(what);
}

// Deterministic quasi-random points: additive recurrence with generalized golden ratios.
inline std::vector<double> kronecker_point(int index, int dim) {
    double phi = 2.0;
    for (int it = 0; it < 64; ++it) phi = std::pow(1.0 + phi, 1.0 / (dim + 1));
    std::vector<double> u(dim);
    double a = 1.0;
    for (int d = 0; d < dim; ++d) {
        a /= phi;
        u[d] = std::fmod(0.5 + a * (index + 1), 1.0);
    }
    return u;
}

struct CheckResult {
    std::string name;
    bool pass = false;
    double worst = 0;  // worst observed value of the checked quantity
    double bound = 0;
    std::string detail;
};

inline bool all_pass(const std::vector<CheckResult>& r) {
    for (const auto& c : r)
        if (!c.pass) return false;
    return true;
}

// Samples of w along one fixed-lapse curve, rho strictly decreasing.
struct NullSlice {
    double s = 0;
    std::vector<double> rho, w;
};

// Worker count for parallel_for; the CLI sets it from --threads.
inline int& thread_count() {
    static int n = 1;
    return n;
}

// f(i) for i in [0, n); each index owns its output slot, so results do not depend on scheduling.
template <class F>
void parallel_for(int n, F&& f, int threads = thread_count()) {
    threads = std::max(1, std::min(threads, n));
    if (threads == 1) {
        for (int i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr err;
    std::atomic<bool> failed{false};
    {
        std::vector<std::jthread> pool;
        for (int t = 0; t < threads; ++t)
            pool.emplace_back([&] {
                for (int i = next++; i < n && !failed; i = next++) {
                    try {
                        f(i);
                    } catch (...) {
                        if (!failed.exchange(true)) err = std::current_exception();
                    }
                }
            });
    }
    if (err) std::rethrow_exception(err);
}

}  // namespace lrs
