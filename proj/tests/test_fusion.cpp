#include "tangleforge/faultsim.hpp"
#include "tangleforge/fusion.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace tangleforge;

TEST_CASE("scalar covariance intersection") {
    const GaussianEstimator e1 = GaussianEstimator::scalar(0.0, 1.0);
    const GaussianEstimator e2 = GaussianEstimator::scalar(2.0, 1.0);
    SECTION("w = 1/2 meets in the middle") {
        const GaussianEstimator f = ci_fuse(e1, e2, 0.5);
        CHECK(f.mean[0] == Catch::Approx(1.0));
        CHECK(f.cov(0, 0) == Catch::Approx(1.0));
    }
    SECTION("w = 1/4 leans toward the first estimate") {
        const GaussianEstimator f = ci_fuse(e1, e2, 0.25);
        CHECK(f.mean[0] == Catch::Approx(0.5));
        CHECK(f.cov(0, 0) == Catch::Approx(1.0));
    }
    SECTION("weights outside (0,1) are rejected") {
        CHECK_THROWS(ci_fuse(e1, e2, 0.0));
        CHECK_THROWS(ci_fuse(e1, e2, 1.0));
    }
    SECTION("dimension mismatch") {
        GaussianEstimator e3;
        e3.mean = Eigen::VectorXd::Zero(2);
        e3.cov = Eigen::MatrixXd::Identity(2, 2);
        CHECK_THROWS(ci_fuse(e1, e3, 0.5));
    }
}

TEST_CASE("unfusing undoes fusing") {
    const GaussianEstimator y = GaussianEstimator::scalar(2.0, 1.0);
    SECTION("scalar example") {
        const GaussianEstimator x = ci_unfuse(GaussianEstimator::scalar(1.0, 1.0), y, 0.5);
        CHECK(x.mean[0] == Catch::Approx(0.0));
        CHECK(x.cov(0, 0) == Catch::Approx(1.0));
    }
    SECTION("idempotent case") {
        const GaussianEstimator x = ci_unfuse(y, y, 0.3);
        CHECK(x.mean[0] == Catch::Approx(2.0));
        CHECK(x.cov(0, 0) == Catch::Approx(1.0));
    }
    SECTION("images outside the fusion range are detected") {
        // recovered precision (1/4 - 0.9)/0.1 < 0
        CHECK_THROWS(ci_unfuse(GaussianEstimator::scalar(0.0, 4.0),
                               GaussianEstimator::scalar(0.0, 1.0), 0.9));
    }
}

TEST_CASE("consistency order") {
    const Eigen::MatrixXd i2 = Eigen::MatrixXd::Identity(2, 2);
    CHECK(is_consistent(i2, i2, 1e-12));
    CHECK(is_consistent(2.0 * i2, i2, 1e-12));
    CHECK_FALSE(is_consistent(i2, 2.0 * i2, 1e-12));
    CHECK_THROWS(is_consistent(i2, Eigen::MatrixXd::Identity(3, 3), 1e-12));
}

TEST_CASE("fusion laws over random SPD triples in dims 1..3") {
    for (int d : {1, 2, 3}) {
        Rng rng(100 + static_cast<std::uint64_t>(d));
        for (int trial = 0; trial < 300; ++trial) {
            GaussianEstimator a{random_vector(rng, d), random_spd(rng, d)};
            GaussianEstimator b{random_vector(rng, d), random_spd(rng, d)};
            GaussianEstimator c{random_vector(rng, d), random_spd(rng, d)};
            const double w = rng.uniform(0.05, 0.95);
            const double wp = rng.uniform(0.05, 0.95);
            const GaussianEstimator idem = ci_fuse(a, a, w);
            REQUIRE(estimator_distance(idem, a) <= 1e-12);
            const GaussianEstimator round = ci_unfuse(ci_fuse(a, b, w), b, w);
            REQUIRE(estimator_distance(round, a) <= 1e-9 * (1.0 + a.mean.norm() + a.cov.norm()));
            const GaussianEstimator lhs = ci_fuse(ci_fuse(a, b, wp), c, w);
            const GaussianEstimator rhs = ci_fuse(ci_fuse(a, c, w), ci_fuse(b, c, w), wp);
            REQUIRE(estimator_distance(lhs, rhs) <=
                    1e-9 * (1.0 + lhs.mean.norm() + lhs.cov.norm()));
        }
    }
}

TEST_CASE("Kullback-Leibler closed form") {
    const GaussianEstimator p = GaussianEstimator::scalar(0.0, 1.0);
    CHECK(kl_gauss(p, p) == Catch::Approx(0.0).margin(1e-15));
    CHECK(kl_gauss(p, GaussianEstimator::scalar(1.0, 1.0)) == Catch::Approx(0.5));
    CHECK(kl_gauss(GaussianEstimator::scalar(0.0, 2.0), p) ==
          Catch::Approx(0.5 * (2.0 - 1.0 - std::log(2.0))));
    Rng rng(5);
    for (int i = 0; i < 50; ++i) {
        GaussianEstimator a{random_vector(rng, 2), random_spd(rng, 2)};
        GaussianEstimator b{random_vector(rng, 2), random_spd(rng, 2)};
        CHECK(kl_gauss(a, b) >= 0.0);
    }
}

TEST_CASE("J functional") {
    const GaussianEstimator p = GaussianEstimator::scalar(0.0, 1.0);
    const GaussianEstimator q = GaussianEstimator::scalar(3.0, 2.0);
    CHECK(j_functional(p, p, p, 0.4) == Catch::Approx(0.0).margin(1e-15));
    SECTION("minimized at the fused point") {
        Rng rng(17);
        const GaussianEstimator fused = ci_fuse(p, q, 0.35);
        const double base = j_functional(fused, p, q, 0.35);
        for (int i = 0; i < 200; ++i) {
            const GaussianEstimator g = perturb_estimator(fused, 0.1, rng);
            CHECK(j_functional(g, p, q, 0.35) >= base - 1e-12);
        }
    }
    SECTION("degenerate weights collapse to one divergence") {
        CHECK(j_functional(p, p, q, 0.0) == Catch::Approx(0.0).margin(1e-15));
    }
}

TEST_CASE("density product and moment forms agree") {
    Rng rng(23);
    for (int trial = 0; trial < 100; ++trial) {
        GaussianEstimator p{random_vector(rng, 2), random_spd(rng, 2)};
        GaussianEstimator q{random_vector(rng, 2), random_spd(rng, 2)};
        const double w = rng.uniform(0.1, 0.9);
        const GaussianEstimator f = geometric_mean_density(p, q, w);
        REQUIRE(estimator_distance(f, ci_fuse(p, q, w)) == 0.0);
        // pointwise oracle: log p^(1-w) q^w minus the fused log-density is
        // constant in x (the normalizer)
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (int k = 0; k < 100; ++k) {
            const Eigen::VectorXd x = random_vector(rng, 2, 2.0);
            const double diff = (1.0 - w) * log_unnormalized_density(p, x) +
                                w * log_unnormalized_density(q, x) -
                                log_unnormalized_density(f, x);
            lo = std::min(lo, diff);
            hi = std::max(hi, diff);
        }
        REQUIRE(hi - lo <= 1e-8);
    }
}

TEST_CASE("fused ellipse contains the input intersection") {
    Rng rng(29);
    int checked = 0;
    for (int pair = 0; pair < 50; ++pair) {
        const Eigen::MatrixXd c1 = random_spd(rng, 2);
        const Eigen::MatrixXd c2 = random_spd(rng, 2);
        const double w = rng.uniform(0.1, 0.9);
        const Eigen::MatrixXd pa =
            (1.0 - w) * spd_inverse(c1) + w * spd_inverse(c2);
        const Eigen::MatrixXd p1 = spd_inverse(c1);
        const Eigen::MatrixXd p2 = spd_inverse(c2);
        const Eigen::LLT<Eigen::MatrixXd> l1(c1);
        for (int k = 0; k < 200 && checked < 2000; ++k) {
            Eigen::VectorXd z = random_vector(rng, 2);
            z *= std::sqrt(rng.uniform()) / std::max(z.norm(), 1e-12);
            const Eigen::VectorXd v = l1.matrixL() * z;  // inside the c1 ellipse (a = 1)
            if (v.dot(p2 * v) > 1.0) continue;           // not in the intersection
            ++checked;
            REQUIRE(v.dot(pa * v) <= 1.0 + 1e-9);
        }
    }
    CHECK(checked >= 500);
}

TEST_CASE("geodesic verification") {
    SECTION("identical endpoints are fixed along the whole path") {
        const GaussianEstimator p = GaussianEstimator::scalar(1.0, 2.0);
        const GeodesicReport rep = verify_geodesic(p, p, 5, 3);
        CHECK(rep.pass);
        CHECK(rep.endpoint_low_err <= 1e-9);
        CHECK(rep.endpoint_high_err <= 1e-9);
    }
    SECTION("scalar midpoint") {
        const GeodesicReport rep = verify_geodesic(GaussianEstimator::scalar(0.0, 1.0),
                                                   GaussianEstimator::scalar(2.0, 1.0), 3, 7);
        CHECK(rep.pass);
        CHECK(rep.grid[1].omega == Catch::Approx(0.5));
    }
    SECTION("random 3-dimensional pair") {
        Rng rng(41);
        GaussianEstimator p{random_vector(rng, 3), random_spd(rng, 3)};
        GaussianEstimator q{random_vector(rng, 3), random_spd(rng, 3)};
        const GeodesicReport rep = verify_geodesic(p, q, 9, 11);
        CHECK(rep.pass);
        CHECK(rep.endpoint_low_err <= 1e-8);
        CHECK(rep.endpoint_high_err <= 1e-8);
        for (const auto& gp : rep.grid) CHECK(gp.fuse_vs_density == 0.0);
    }
    SECTION("grid must have at least two points") {
        CHECK_THROWS(verify_geodesic(GaussianEstimator::scalar(0, 1),
                                     GaussianEstimator::scalar(1, 1), 1));
    }
}

TEST_CASE("fault codes") {
    CHECK(parse_fault_code("0X0") == FaultCode::f0X0);
    CHECK(to_string(parse_fault_code("X0X")) == "X0X");
    CHECK_THROWS(parse_fault_code("XX0"));
    CHECK_THROWS(parse_fault_code("bad"));
}

TEST_CASE("fault-adaptive configuration choice") {
    Rng rng(53);
    auto estimator = [&](double mu) {
        GaussianEstimator e;
        e.mean = Eigen::VectorXd::Constant(1, mu);
        e.cov = random_spd(rng, 1);
        return e;
    };
    std::vector<GaussianEstimator> xs, ys, zs;
    std::vector<FaultCode> codes = {FaultCode::f000, FaultCode::f00X, FaultCode::f0X0,
                                    FaultCode::fX00, FaultCode::fX0X, FaultCode::f0XX};
    for (std::size_t i = 0; i < codes.size(); ++i) {
        xs.push_back(estimator(0.0));
        ys.push_back(estimator(1.0));
        zs.push_back(estimator(2.0));
    }
    const auto steps = fault_schedule_sim(xs, ys, zs, codes, 0.4, 0.6);
    REQUIRE(steps.size() == codes.size());
    CHECK(steps[0].config == "left");      // nothing faulty: first catalog entry
    CHECK(steps[1].config == "left-alt");  // x faulty: shield y > z
    CHECK(steps[2].config == "left");      // y faulty: x > z stays clean
    CHECK(steps[3].config == "right");     // z faulty: x > y stays clean
    for (int i = 0; i < 4; ++i) {
        CHECK(steps[static_cast<std::size_t>(i)].clean);
        CHECK(steps[static_cast<std::size_t>(i)].faulty_upstream == 0);
    }
    // double faults touch every wiring; the best choice keeps one clean input
    CHECK_FALSE(steps[4].clean);
    CHECK(steps[4].faulty_upstream == 1);
    CHECK_FALSE(steps[5].clean);
    CHECK(steps[5].faulty_upstream == 1);

    SECTION("both wirings agree when nothing is faulty") {
        const GaussianEstimator xz = ci_fuse(xs[0], zs[0], 0.6);
        const GaussianEstimator yz = ci_fuse(ys[0], zs[0], 0.6);
        const GaussianEstimator left = ci_fuse(xz, yz, 0.4);
        const GaussianEstimator right = ci_fuse(ci_fuse(xs[0], ys[0], 0.4), zs[0], 0.6);
        CHECK(estimator_distance(left, right) <= 1e-10);
        CHECK(estimator_distance(steps[0].fused, left) <= 1e-12);
    }
    SECTION("stream and fault lengths must agree") {
        CHECK_THROWS(fault_schedule_sim(xs, ys, zs, {FaultCode::f000}, 0.4, 0.6));
    }
}
