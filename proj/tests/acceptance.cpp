// Scripted verification suite: runs every release criterion at its stated
// tolerance and prints one PASS/FAIL line per criterion.

#include "tangleforge/aqc.hpp"
#include "tangleforge/causal.hpp"
#include "tangleforge/cli.hpp"
#include "tangleforge/faultsim.hpp"
#include "tangleforge/fusion.hpp"
#include "tangleforge/invariants.hpp"
#include "tangleforge/quandle.hpp"
#include "tangleforge/rewrite.hpp"
#include "tangleforge/tm_format.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

using namespace tangleforge;

namespace {

int failures = 0;

void criterion(int id, const std::string& name, const std::function<std::string()>& body) {
    const auto start = std::chrono::steady_clock::now();
    std::string detail;
    bool threw = false;
    try {
        detail = body();
    } catch (const std::exception& e) {
        threw = true;
        detail = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool ok = !threw && detail.empty();
    if (!ok) ++failures;
    std::printf("[%s] %02d %-28s (%.2fs)%s%s\n", ok ? "PASS" : "FAIL", id, name.c_str(), secs,
                detail.empty() ? "" : " -- ", detail.c_str());
    std::fflush(stdout);
}

std::string fixture(const std::string& name) {
    return std::string(TF_FIXTURE_DIR) + "/" + name;
}

TangleMachine load(const std::string& name) { return parse_tm_file(fixture(name)).machine; }

std::string check(bool ok, const std::string& msg) { return ok ? "" : msg; }

long long filter_count(const TangleMachine& m, const QuandleInstance& q) {
    TangleMachine mq = m;
    mq.quandle = q;
    const std::vector<Element> elems = carrier(q);
    const std::size_t n = mq.arcs.size();
    long long count = 0;
    std::vector<std::size_t> idx(n, 0);
    while (true) {
        Coloring c;
        for (std::size_t i = 0; i < n; ++i) c[mq.arcs[i]] = elems[idx[i]];
        if (check_coloring(mq, c)) ++count;
        std::size_t k = 0;
        while (k < n && ++idx[k] == elems.size()) idx[k++] = 0;
        if (k == n) break;
    }
    return count;
}

// 1. axiom suite across the quandle catalog
std::string crit_axioms() {
    for (int n : {3, 5, 7}) {
        const AxiomReport rep = verify_axioms(QuandleInstance::dihedral(n), {true, 0, 0});
        if (!rep.all_pass()) return "dihedral(" + std::to_string(n) + ") failed an axiom";
    }
    if (!verify_axioms(QuandleInstance::conjugation(3), {true, 0, 0}).all_pass())
        return "conjugation(3) failed an axiom";
    const SamplePlan plan{false, 1000, 2024};
    for (const QuandleInstance& q :
         {QuandleInstance::linear(2), QuandleInstance::loglinear(2),
          QuandleInstance::gaussian_ci(2), QuandleInstance::hamiltonian(2)}) {
        const AxiomReport rep = verify_axioms(q, plan, 1e-8);
        for (const auto& law : rep.laws)
            if (!law.pass)
                return kind_name(q.kind) + " failed " + law.name + " at " + law.counterexample;
    }
    return "";
}

// 2. exact colouring counts against the brute-force oracle
std::string crit_counts() {
    struct Row {
        const char* file;
        int k;
        long long expect;
    };
    for (const Row& row : std::initializer_list<Row>{{"trefoil.tm", 3, 9},
                                                     {"figure8.tm", 3, 3},
                                                     {"figure8.tm", 5, 25},
                                                     {"trefoil.tm", 5, 5}}) {
        const TangleMachine m = load(row.file);
        const QuandleInstance q = QuandleInstance::dihedral(row.k);
        const long long got = enumerate_colorings(m, q).count;
        if (got != row.expect)
            return std::string(row.file) + " dihedral(" + std::to_string(row.k) + "): got " +
                   std::to_string(got) + ", want " + std::to_string(row.expect);
        if (got != filter_count(m, q))
            return std::string(row.file) + ": enumeration disagrees with the filter oracle";
    }
    const TangleMachine unknot = load("unknot.tm");
    for (int k = 2; k <= 9; ++k)
        if (enumerate_colorings(unknot, QuandleInstance::dihedral(k)).count != k)
            return "unknot dihedral(" + std::to_string(k) + ") != " + std::to_string(k);
    return "";
}

// 3. colouring counts survive every applicable move
std::string crit_moves() {
    for (const char* name : {"unknot.tm", "trefoil.tm", "trefoil_open.tm", "figure8.tm",
                             "kink.tm", "r2demo.tm", "r3pair_left.tm", "r3pair_right.tm"}) {
        const TangleMachine m = load(name);
        const long long c3 = enumerate_colorings(m, QuandleInstance::dihedral(3)).count;
        const long long c5 = enumerate_colorings(m, QuandleInstance::dihedral(5)).count;
        for (const RewriteSite& site : find_sites(m, true)) {
            const TangleMachine out = apply_move(m, site);
            if (enumerate_colorings(out, QuandleInstance::dihedral(3)).count != c3 ||
                enumerate_colorings(out, QuandleInstance::dihedral(5)).count != c5)
                return std::string(name) + ": " + move_name(site.kind) +
                       " changed a colouring count";
        }
    }
    return "";
}

// 4. fusion laws on random SPD triples, dims 1..3
std::string crit_ci_laws() {
    for (int d : {1, 2, 3}) {
        Rng rng(4000 + static_cast<std::uint64_t>(d));
        for (int i = 0; i < 1000; ++i) {
            const GaussianEstimator a{random_vector(rng, d), random_spd(rng, d)};
            const GaussianEstimator b{random_vector(rng, d), random_spd(rng, d)};
            const GaussianEstimator c{random_vector(rng, d), random_spd(rng, d)};
            const double w = rng.uniform(0.05, 0.95), wp = rng.uniform(0.05, 0.95);
            if (estimator_distance(ci_fuse(a, a, w), a) > 1e-12)
                return "idempotence exceeded 1e-12 in dim " + std::to_string(d);
            const double scale = 1.0 + a.mean.norm() + a.cov.norm();
            if (estimator_distance(ci_unfuse(ci_fuse(a, b, w), b, w), a) > 1e-9 * scale)
                return "reversibility exceeded 1e-9 in dim " + std::to_string(d);
            const GaussianEstimator lhs = ci_fuse(ci_fuse(a, b, wp), c, w);
            const GaussianEstimator rhs = ci_fuse(ci_fuse(a, c, w), ci_fuse(b, c, w), wp);
            if (estimator_distance(lhs, rhs) > 1e-9 * (1.0 + lhs.mean.norm() + lhs.cov.norm()))
                return "no-double-counting exceeded 1e-9 in dim " + std::to_string(d);
        }
    }
    return "";
}

// 5. the fused moments match the weighted density product pointwise
std::string crit_density_product() {
    Rng rng(5005);
    for (int pair = 0; pair < 100; ++pair) {
        const int d = 1 + static_cast<int>(pair % 3);
        const GaussianEstimator p{random_vector(rng, d), random_spd(rng, d)};
        const GaussianEstimator q{random_vector(rng, d), random_spd(rng, d)};
        const double w = rng.uniform(0.05, 0.95);
        const GaussianEstimator f = geometric_mean_density(p, q, w);
        if (estimator_distance(f, ci_fuse(p, q, w)) != 0.0)
            return "density route differs from the fusion route";
        double lo = 1e300, hi = -1e300;
        for (int k = 0; k < 100; ++k) {
            const Eigen::VectorXd x = random_vector(rng, d, 2.0);
            const double diff = (1.0 - w) * log_unnormalized_density(p, x) +
                                w * log_unnormalized_density(q, x) -
                                log_unnormalized_density(f, x);
            lo = std::min(lo, diff);
            hi = std::max(hi, diff);
        }
        if (hi - lo > 1e-8) return "log-density ratio varies by " + format_double(hi - lo);
    }
    return "";
}

// 6. J-minimality at the fused point plus endpoint limits
std::string crit_j_minimality() {
    Rng rng(6006);
    for (int pair = 0; pair < 50; ++pair) {
        const int d = 1 + static_cast<int>(pair % 3);
        const GaussianEstimator p{random_vector(rng, d), random_spd(rng, d)};
        const GaussianEstimator q{random_vector(rng, d), random_spd(rng, d)};
        const double scale = 1.0 + p.mean.norm() + p.cov.norm() + q.mean.norm() + q.cov.norm();
        if (estimator_distance(ci_fuse(p, q, 1e-9), p) > 1e-6 * scale)
            return "low endpoint limit off";
        if (estimator_distance(ci_fuse(p, q, 1.0 - 1e-9), q) > 1e-6 * scale)
            return "high endpoint limit off";
        for (int wi = 1; wi <= 9; ++wi) {
            const double w = 0.1 * wi;
            const GaussianEstimator fused = ci_fuse(p, q, w);
            const double base = j_functional(fused, p, q, w);
            for (int c = 0; c < 200; ++c) {
                const GaussianEstimator g = perturb_estimator(fused, c % 2 ? 0.1 : 0.01, rng);
                if (j_functional(g, p, q, w) < base - 1e-12)
                    return "a perturbation beat the fused point at w=" + format_double(w);
            }
        }
    }
    return "";
}

// 7. fused covariance ellipse contains the input intersection
std::string crit_ellipse() {
    Rng rng(7007);
    for (int pair = 0; pair < 500; ++pair) {
        const Eigen::MatrixXd c1 = random_spd(rng, 2);
        const Eigen::MatrixXd c2 = random_spd(rng, 2);
        const double w = rng.uniform(0.05, 0.95);
        const Eigen::MatrixXd p1 = spd_inverse(c1);
        const Eigen::MatrixXd p2 = spd_inverse(c2);
        const Eigen::MatrixXd pa = (1.0 - w) * p1 + w * p2;
        const Eigen::LLT<Eigen::MatrixXd> l1(c1);
        int found = 0;
        for (int att = 0; att < 5000 && found < 100; ++att) {
            Eigen::VectorXd z = random_vector(rng, 2);
            z *= std::sqrt(rng.uniform()) / std::max(z.norm(), 1e-12);
            const Eigen::VectorXd v = l1.matrixL() * z;
            if (v.dot(p1 * v) > 1.0 || v.dot(p2 * v) > 1.0) continue;
            ++found;
            if (v.dot(pa * v) > 1.0 + 1e-9)
                return "containment violated by " + format_double(v.dot(pa * v) - 1.0);
        }
        if (found < 100) return "could not sample 100 intersection points";
    }
    return "";
}

// 8. single-qubit closed-form gap profile
std::string crit_aqc_closed_form() {
    OperatorCatalog ops{{"PX0", projector_x(0, 1, 0)}, {"PZ", projector_z(1, 0)}};
    const GapProfile prof = gap_profile(
        ScheduleExpr::fuse(0, ScheduleExpr::leaf("PX0"), ScheduleExpr::leaf("PZ")),
        FrameClock{0.5, {1.0}}, ops, 1001);
    for (std::size_t i = 0; i < prof.t.size(); ++i) {
        const double s = prof.t[i];
        const double want = std::sqrt((1.0 - s) * (1.0 - s) + s * s);
        if (std::abs(prof.gap[i] - want) > 1e-6)
            return "gap off by " + format_double(std::abs(prof.gap[i] - want)) + " at s=" +
                   format_double(s);
    }
    if (std::abs(prof.g_min - std::sqrt(2.0) / 2.0) > 1e-6)
        return "g_min = " + format_double(prof.g_min);
    if (std::abs(prof.computation_time - 2.0) > 1e-5)
        return "time = " + format_double(prof.computation_time);
    return "";
}

// 9. 2-SAT spectra: clause Hamiltonian, oracle, and the evolving G(t)
std::string crit_twosat_spectra() {
    const TwoSatProblem sat = build_twosat_problem(0.5);
    const Hmat& h1 = sat.ops.at("H1");
    for (int b = 0; b < 16; ++b) {
        Eigen::VectorXcd v = Eigen::VectorXcd::Zero(16);
        v[b] = 1.0;
        const bool good = b == 0b0000 || b == 0b0011 || b == 0b1100 || b == 0b1111;
        const std::complex<double> val = (v.adjoint() * h1 * v)(0, 0);
        if (std::abs(val.real() - (good ? 0.75 : 1.0)) > 1e-12 ||
            (h1 * v - val * v).norm() > 1e-12)
            return "clause spectrum wrong on basis state " + std::to_string(b);
    }
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(16);
    v[0b0000] = v[0b0011] = v[0b1100] = v[0b1111] = 0.5;
    if ((sat.ops.at("Horacle") * v).norm() > 1e-12) return "oracle does not annihilate v";
    Rng rng(9009);
    for (int i = 0; i < 8; ++i) {
        Eigen::VectorXcd u(16);
        for (int k = 0; k < 16; ++k) u[k] = std::complex<double>(rng.normal(), rng.normal());
        const Eigen::VectorXcd perp = u - v * (v.adjoint() * u);
        if ((sat.ops.at("Horacle") * perp - perp).norm() > 1e-12 * perp.norm())
            return "oracle is not the identity on the v-orthogonal complement";
    }
    const Hmat g1 = eval_schedule(sat.g, 1.0, sat.clock, sat.ops);
    const double dev = max_abs((g1 - h1).eval());
    if (dev > 1e-10) return "G(1) deviates from the clause Hamiltonian by " + format_double(dev);
    return "";
}

// 10. computation-time shapes of the entanglement experiment
std::string crit_entangle_shape() {
    double prev = 0.0;
    for (int i = 1; i <= 7; ++i) {
        const double lam = 0.1 * i;
        const EntangleProblem prob = build_entanglement_problem(0.95, lam, 0.5);
        const double time =
            gap_profile(prob.standard, prob.clock, prob.ops, 512).computation_time;
        if (i > 1 && time < prev - 1e-9)
            return "standard time decreased at lambda=" + format_double(lam);
        prev = time;
    }
    double best_gap = -1.0, best_lambda = 0.0;
    for (int i = 0; i < 25; ++i) {
        const double lam = 0.05 + 0.9 * i / 24.0;
        const EntangleProblem prob = build_entanglement_problem(0.95, lam, 0.5);
        const double t1 = gap_profile(prob.o1, prob.clock, prob.ops, 512).computation_time;
        const double t2 = gap_profile(prob.o1prime, prob.clock, prob.ops, 512).computation_time;
        const double diff = std::abs(t1 - t2);
        if (diff > best_gap) {
            best_gap = diff;
            best_lambda = lam;
        }
    }
    const double target = 1.0 / std::sqrt(2.0);
    if (std::abs(best_lambda - target) > 0.1)
        return "time difference peaks at lambda=" + format_double(best_lambda) +
               ", expected within 0.1 of " + format_double(target);
    return "";
}

// 11. fault simulation picks shielded wirings, and code 000 agrees across them
std::string crit_faultsim() {
    Rng rng(1111);
    std::vector<GaussianEstimator> xs, ys, zs;
    const std::vector<FaultCode> codes = {FaultCode::f000, FaultCode::f00X, FaultCode::f0X0,
                                          FaultCode::fX00, FaultCode::fX0X, FaultCode::f0XX};
    for (std::size_t i = 0; i < codes.size(); ++i) {
        xs.push_back({random_vector(rng, 2), random_spd(rng, 2)});
        ys.push_back({random_vector(rng, 2), random_spd(rng, 2)});
        zs.push_back({random_vector(rng, 2), random_spd(rng, 2)});
    }
    const auto steps = fault_schedule_sim(xs, ys, zs, codes, 0.4, 0.6);
    for (std::size_t i = 0; i < steps.size(); ++i) {
        const bool clean_possible = codes[i] != FaultCode::fX0X && codes[i] != FaultCode::f0XX;
        if (clean_possible && !steps[i].clean)
            return "no shielded wiring chosen for code " + to_string(codes[i]);
        if (!clean_possible && steps[i].faulty_upstream != 1)
            return "double fault should leave exactly one contaminated input";
    }
    const GaussianEstimator left =
        ci_fuse(ci_fuse(xs[0], zs[0], 0.6), ci_fuse(ys[0], zs[0], 0.6), 0.4);
    const GaussianEstimator right = ci_fuse(ci_fuse(xs[0], ys[0], 0.4), zs[0], 0.6);
    if (estimator_distance(left, right) > 1e-10)
        return "code 000 wirings disagree by " + format_double(estimator_distance(left, right));
    return "";
}

// 12. interaction detection on the synthetic agent family
std::string crit_detection() {
    SynthSpec spec;
    spec.p = 2;
    spec.length = 2000;
    Eigen::VectorXd drive(2), weak(2);
    drive << 2.0, 0.0;  // 4:1 signal variance against unit noise
    weak << 0.5, 0.0;
    spec.blocks["Y->X"] = drive;
    spec.blocks["Y->Z"] = drive;
    spec.blocks["X->Z"] = weak;
    int correct = 0;
    Rng seeds(121212);
    for (int trial = 0; trial < 100; ++trial) {
        const TimeSeriesPanel panel = synth_panel(spec, seeds.bits());
        try {
            if (detect_interaction(panel, 2).agent == "Y") ++correct;
        } catch (const std::exception&) {
        }
    }
    if (correct < 95) return "agent recovered only " + std::to_string(correct) + "/100 times";

    SynthSpec clean = spec;
    clean.noise["Z"] = 0.0;
    const TriangleFit fit = fit_triangle(synth_panel(clean, 5), 2);
    if ((fit.blocks.at("X->Z") - weak).cwiseAbs().maxCoeff() > 1e-8 ||
        (fit.blocks.at("Y->Z") - drive).cwiseAbs().maxCoeff() > 1e-8)
        return "noiseless coefficients off by more than 1e-8";
    return "";
}

// 13. CLI byte determinism and .tm round-tripping
std::string crit_cli() {
    using tangleforge::cli::run;
    for (const std::vector<std::string>& argv :
         {std::vector<std::string>{"geodesic-check", "--dim", "2", "--grid", "5", "--seed", "1"},
          std::vector<std::string>{"enumerate", fixture("trefoil.tm"), "--list"},
          std::vector<std::string>{"aqc", "gap", "--grid", "65"},
          std::vector<std::string>{"equiv", fixture("r3pair_left.tm"),
                                   fixture("r3pair_right.tm"), "--depth", "2"}}) {
        const auto a = run(argv);
        const auto b = run(argv);
        if (a.exit_code != 0) return "command failed: " + a.command + " -- " + a.stderr_text;
        if (a.stdout_text != b.stdout_text) return "non-deterministic output for " + a.command;
    }
    const auto count = run({"enumerate", fixture("trefoil.tm")});
    if (count.stdout_text != "{\"count\":9}\n") return "unexpected enumerate payload";
    for (const char* name : {"unknot.tm", "trefoil.tm", "trefoil_open.tm", "figure8.tm",
                             "r3pair_left.tm", "r3pair_right.tm", "kink.tm", "r2demo.tm",
                             "chain_linear.tm", "gauss_pair.tm", "conj_demo.tm"}) {
        const TmDocument doc = parse_tm_file(fixture(name));
        const TmDocument round = parse_tm(serialize_tm(doc.machine, doc.colors));
        if (canonical_key(round.machine) != canonical_key(doc.machine))
            return std::string(name) + " does not round trip";
    }
    return "";
}

} // namespace

int main() {
    criterion(1, "quandle-axiom-suite", crit_axioms);
    criterion(2, "colouring-counts", crit_counts);
    criterion(3, "move-invariance", crit_moves);
    criterion(4, "ci-fusion-laws", crit_ci_laws);
    criterion(5, "density-product-moments", crit_density_product);
    criterion(6, "j-minimality-endpoints", crit_j_minimality);
    criterion(7, "ellipse-containment", crit_ellipse);
    criterion(8, "aqc-closed-form", crit_aqc_closed_form);
    criterion(9, "twosat-spectra", crit_twosat_spectra);
    criterion(10, "entangle-time-shape", crit_entangle_shape);
    criterion(11, "fault-simulation", crit_faultsim);
    criterion(12, "interaction-detection", crit_detection);
    criterion(13, "cli-determinism-roundtrip", crit_cli);
    if (failures == 0) {
        std::printf("all criteria passed\n");
        return 0;
    }
    std::printf("%d criterion(s) failed\n", failures);
    return 1;
}
