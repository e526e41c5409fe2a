#pragma once

#include "tangleforge/numeric.hpp"

#include <Eigen/Dense>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace tangleforge {

/**
 * A Gaussian estimate of an unknown state vector: a mean and a claimed
 * error covariance. The covariance must be symmetric positive definite.
 */
struct GaussianEstimator {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;

    int dim() const { return static_cast<int>(mean.size()); }

    static GaussianEstimator scalar(double mu, double var) {
        GaussianEstimator e;
        e.mean = Eigen::VectorXd::Constant(1, mu);
        e.cov = Eigen::MatrixXd::Constant(1, 1, var);
        return e;
    }
};

/// Covariance ellipse { v : v^T shape^{-1} v <= level }.
struct EllipseSpec {
    Eigen::VectorXd center;
    Eigen::MatrixXd shape;
    double level = 1.0;
};

inline void require_spd(const Eigen::MatrixXd& m, const std::string& what,
                        double sym_tol = 1e-12, double eig_floor = 1e-10) {
    if (m.rows() != m.cols())
        throw std::invalid_argument(what + ": matrix not square");
    if (max_abs(m - m.transpose()) > sym_tol * std::max(1.0, max_abs(m)))
        throw std::invalid_argument(what + ": matrix not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() <= eig_floor)
        throw std::invalid_argument(what + ": matrix not positive definite");
}

inline void require_estimator(const GaussianEstimator& e, const std::string& what) {
    if (e.mean.size() != e.cov.rows())
        throw std::invalid_argument(what + ": mean/covariance dimension mismatch");
    require_spd(e.cov, what);
}

inline void require_same_dim(const GaussianEstimator& a, const GaussianEstimator& b,
                             const std::string& what) {
    if (a.dim() != b.dim())
        throw std::invalid_argument(what + ": estimator dimension mismatch");
}

inline Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& m) {
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success)
        throw std::invalid_argument("spd_inverse: Cholesky failed, matrix not SPD");
    return llt.solve(Eigen::MatrixXd::Identity(m.rows(), m.cols()));
}

inline void require_weight(double w, const std::string& what) {
    if (!(w > 0.0 && w < 1.0))
        throw std::invalid_argument(what + ": weight must lie in (0,1)");
}

/**
 * Covariance intersection of two estimates with weight w:
 *   C^{-1}  = (1-w) C1^{-1} + w C2^{-1}
 *   mean    = C [ (1-w) C1^{-1} m1 + w C2^{-1} m2 ]
 * Consistent inputs yield a consistent output for any w, without knowing
 * the error cross-correlation.
 */
inline GaussianEstimator ci_fuse(const GaussianEstimator& e1, const GaussianEstimator& e2,
                                 double w) {
    require_weight(w, "ci_fuse");
    require_estimator(e1, "ci_fuse(e1)");
    require_estimator(e2, "ci_fuse(e2)");
    require_same_dim(e1, e2, "ci_fuse");
    const Eigen::MatrixXd p1 = spd_inverse(e1.cov);
    const Eigen::MatrixXd p2 = spd_inverse(e2.cov);
    const Eigen::MatrixXd pa = (1.0 - w) * p1 + w * p2;
    GaussianEstimator out;
    out.cov = spd_inverse(pa);
    out.mean = Eigen::LLT<Eigen::MatrixXd>(pa).solve((1.0 - w) * (p1 * e1.mean) +
                                                     w * (p2 * e2.mean));
    return out;
}

/**
 * Inverse of ci_fuse in its first argument: the unique e with
 * ci_fuse(e, y, w) == z. Fails when the recovered precision
 * (Cz^{-1} - w Cy^{-1}) / (1-w) is not positive definite, which signals
 * that z is not in the image of the fusion against y.
 */
inline GaussianEstimator ci_unfuse(const GaussianEstimator& z, const GaussianEstimator& y,
                                   double w) {
    require_weight(w, "ci_unfuse");
    require_estimator(z, "ci_unfuse(z)");
    require_estimator(y, "ci_unfuse(y)");
    require_same_dim(z, y, "ci_unfuse");
    const Eigen::MatrixXd pz = spd_inverse(z.cov);
    const Eigen::MatrixXd py = spd_inverse(y.cov);
    const Eigen::MatrixXd px = (pz - w * py) / (1.0 - w);
    require_spd(px, "ci_unfuse: recovered precision", 1e-10);
    GaussianEstimator out;
    out.cov = spd_inverse(px);
    out.mean = Eigen::LLT<Eigen::MatrixXd>(px).solve((pz * z.mean - w * (py * y.mean)) /
                                                     (1.0 - w));
    return out;
}

/// PSD-order consistency test: min eig(claimed - actual) >= -tol.
inline bool is_consistent(const Eigen::MatrixXd& claimed, const Eigen::MatrixXd& actual,
                          double tol) {
    if (claimed.rows() != actual.rows() || claimed.cols() != actual.cols())
        throw std::invalid_argument("is_consistent: dimension mismatch");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(claimed - actual,
                                                      Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff() >= -tol;
}

/**
 * Moments of the Gaussian whose unnormalized density is p^{1-w} q^w.
 * These are the covariance-intersection formulas, so this is ci_fuse
 * by another name; both entry points are kept because they verify each
 * other against different oracles.
 */
inline GaussianEstimator geometric_mean_density(const GaussianEstimator& p,
                                                const GaussianEstimator& q, double w) {
    return ci_fuse(p, q, w);
}

/// log of the unnormalized Gaussian density exp(-1/2 (x-m)^T C^{-1} (x-m)).
inline double log_unnormalized_density(const GaussianEstimator& e,
                                       const Eigen::VectorXd& x) {
    const Eigen::VectorXd d = x - e.mean;
    return -0.5 * d.dot(Eigen::LLT<Eigen::MatrixXd>(e.cov).solve(d));
}

/// Kullback-Leibler divergence KL(p || q) between Gaussians, closed form.
inline double kl_gauss(const GaussianEstimator& p, const GaussianEstimator& q) {
    require_estimator(p, "kl_gauss(p)");
    require_estimator(q, "kl_gauss(q)");
    require_same_dim(p, q, "kl_gauss");
    const int d = p.dim();
    Eigen::LLT<Eigen::MatrixXd> lq(q.cov);
    Eigen::LLT<Eigen::MatrixXd> lp(p.cov);
    const double tr = lq.solve(p.cov).trace();
    const Eigen::VectorXd dm = q.mean - p.mean;
    const double quad = dm.dot(lq.solve(dm));
    double logdet_q = 0.0, logdet_p = 0.0;
    for (int i = 0; i < d; ++i) {
        logdet_q += 2.0 * std::log(lq.matrixL()(i, i));
        logdet_p += 2.0 * std::log(lp.matrixL()(i, i));
    }
    return 0.5 * (tr + quad - d + logdet_q - logdet_p);
}

/// J(g) = (1-w) KL(g||p) + w KL(g||q); minimized at the fused Gaussian.
inline double j_functional(const GaussianEstimator& g, const GaussianEstimator& p,
                           const GaussianEstimator& q, double w) {
    return (1.0 - w) * kl_gauss(g, p) + w * kl_gauss(g, q);
}

/// Gaussian near e: mean shifted by delta * normal, covariance scaled by
/// a symmetric factor of spectral size <= delta (stays SPD for delta < 1).
inline GaussianEstimator perturb_estimator(const GaussianEstimator& e, double delta,
                                           Rng& rng) {
    const int d = e.dim();
    GaussianEstimator out;
    out.mean = e.mean + delta * random_vector(rng, d);
    Eigen::MatrixXd s(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j <= i; ++j) s(i, j) = s(j, i) = rng.uniform(-0.5, 0.5);
    const Eigen::MatrixXd l = Eigen::LLT<Eigen::MatrixXd>(e.cov).matrixL();
    out.cov = l * (Eigen::MatrixXd::Identity(d, d) + delta * s) * l.transpose();
    out.cov = 0.5 * (out.cov + out.cov.transpose());
    return out;
}

inline double estimator_distance(const GaussianEstimator& a, const GaussianEstimator& b) {
    return std::sqrt((a.mean - b.mean).squaredNorm() + (a.cov - b.cov).squaredNorm());
}

struct GeodesicReport {
    struct GridPoint {
        double omega = 0.0;
        double fuse_vs_density = 0.0;  // discrepancy between the two fusion routes
        double j_at_fused = 0.0;
        double j_cloud_min = 0.0;      // smallest J over the perturbation cloud
        bool minimal = false;          // J(fused) <= J(every cloud member)
    };
    double endpoint_low_err = 0.0;   // | fuse at w -> 0  vs p |
    double endpoint_high_err = 0.0;  // | fuse at w -> 1  vs q |
    std::vector<GridPoint> grid;
    bool pass = false;
};

/**
 * Numerical check that the one-parameter fusion family traces the
 * geodesic between p and q: endpoint limits, agreement between the
 * moment route and the density-product route, and J-minimality against
 * a perturbation cloud at every interior grid weight.
 */
inline GeodesicReport verify_geodesic(const GaussianEstimator& p, const GaussianEstimator& q,
                                      int grid, std::uint64_t seed = 0,
                                      int cloud_size = 200, double delta = 0.05,
                                      double endpoint_tol = 1e-6) {
    if (grid < 2) throw std::invalid_argument("verify_geodesic: grid must be >= 2");
    require_same_dim(p, q, "verify_geodesic");
    Rng rng(seed);
    GeodesicReport rep;
    const GaussianEstimator lo = ci_fuse(p, q, 1e-9);
    const GaussianEstimator hi = ci_fuse(p, q, 1.0 - 1e-9);
    rep.endpoint_low_err = estimator_distance(lo, p);
    rep.endpoint_high_err = estimator_distance(hi, q);
    bool all_ok = rep.endpoint_low_err <= endpoint_tol && rep.endpoint_high_err <= endpoint_tol;
    for (int j = 0; j < grid; ++j) {
        GeodesicReport::GridPoint gp;
        gp.omega = static_cast<double>(j + 1) / (grid + 1);
        const GaussianEstimator fused = ci_fuse(p, q, gp.omega);
        const GaussianEstimator dens = geometric_mean_density(p, q, gp.omega);
        gp.fuse_vs_density = estimator_distance(fused, dens);
        gp.j_at_fused = j_functional(fused, p, q, gp.omega);
        gp.minimal = true;
        gp.j_cloud_min = std::numeric_limits<double>::infinity();
        for (int c = 0; c < cloud_size; ++c) {
            const GaussianEstimator g = perturb_estimator(fused, delta, rng);
            const double jg = j_functional(g, p, q, gp.omega);
            gp.j_cloud_min = std::min(gp.j_cloud_min, jg);
            if (jg < gp.j_at_fused - 1e-12) gp.minimal = false;
        }
        all_ok = all_ok && gp.minimal && gp.fuse_vs_density == 0.0;
        rep.grid.push_back(gp);
    }
    rep.pass = all_ok;
    return rep;
}

} // namespace tangleforge
