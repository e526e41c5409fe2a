#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <string>

namespace tangleforge {

/**
 * Deterministic random source. Every randomized routine in the library
 * draws through this class, so a 64-bit seed pins the entire stream.
 * Normals use explicit Box-Muller rather than std::normal_distribution,
 * whose output is implementation-defined.
 */
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t bits() { return gen_(); }

    // uniform in [0,1)
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    std::uint64_t below(std::uint64_t n) { return gen_() % n; }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

inline Eigen::VectorXd random_vector(Rng& rng, int d, double scale = 1.0) {
    Eigen::VectorXd v(d);
    for (int i = 0; i < d; ++i) v[i] = scale * rng.normal();
    return v;
}

/// Random SPD matrix with eigenvalues in [0.4, 2.5] (well conditioned).
inline Eigen::MatrixXd random_spd(Rng& rng, int d) {
    Eigen::MatrixXd g(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) g(i, j) = rng.normal();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ();
    Eigen::VectorXd lam(d);
    for (int i = 0; i < d; ++i) lam[i] = rng.uniform(0.4, 2.5);
    return q * lam.asDiagonal() * q.transpose();
}

inline bool approx(double a, double b, double tol) {
    return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

inline double rel_err(double got, double want) {
    return std::abs(got - want) / std::max(1.0, std::abs(want));
}

template <typename Derived>
double max_abs(const Eigen::MatrixBase<Derived>& m) {
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

/// Shortest decimal form that round-trips to the same double.
inline std::string format_double(double x) {
    char buf[40];
    for (int prec = 15; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, x);
        if (std::strtod(buf, nullptr) == x) return buf;
    }
    return buf;
}

} // namespace tangleforge
