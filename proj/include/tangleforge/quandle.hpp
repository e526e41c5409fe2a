#pragma once

#include "tangleforge/fusion.hpp"
#include "tangleforge/numeric.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cctype>
#include <complex>
#include <functional>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace tangleforge {

/**
 * Permutation of {0..d-1}. Composition is left-to-right:
 * (a.then(b))(i) = b(a(i)).
 */
struct Permutation {
    std::vector<int> img;

    static Permutation identity(int d) {
        Permutation p;
        p.img.resize(d);
        std::iota(p.img.begin(), p.img.end(), 0);
        return p;
    }

    int degree() const { return static_cast<int>(img.size()); }
    int operator()(int i) const { return img[static_cast<std::size_t>(i)]; }

    Permutation inverse() const {
        Permutation p = identity(degree());
        for (int i = 0; i < degree(); ++i) p.img[static_cast<std::size_t>(img[i])] = i;
        return p;
    }

    Permutation then(const Permutation& o) const {
        Permutation p = *this;
        for (int i = 0; i < degree(); ++i) p.img[i] = o.img[static_cast<std::size_t>(img[i])];
        return p;
    }

    bool operator==(const Permutation&) const = default;

    /// Cycle notation on 1-based points, fixed points omitted; "()" is identity.
    std::string to_cycles() const {
        std::string out;
        std::vector<bool> seen(img.size(), false);
        for (int i = 0; i < degree(); ++i) {
            if (seen[i] || img[i] == i) continue;
            out += "(";
            int j = i;
            bool first = true;
            while (!seen[j]) {
                seen[j] = true;
                if (!first) out += " ";
                out += std::to_string(j + 1);
                first = false;
                j = img[j];
            }
            out += ")";
        }
        return out.empty() ? "()" : out;
    }

    static Permutation from_cycles(const std::string& text, int degree) {
        Permutation p = identity(degree);
        std::size_t i = 0;
        auto skip_ws = [&] { while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i; };
        skip_ws();
        while (i < text.size()) {
            if (text[i] != '(') throw std::invalid_argument("bad cycle notation: " + text);
            ++i;
            std::vector<int> cyc;
            while (true) {
                skip_ws();
                if (i >= text.size()) throw std::invalid_argument("unterminated cycle: " + text);
                if (text[i] == ')') { ++i; break; }
                std::size_t end = i;
                while (end < text.size() && std::isdigit(static_cast<unsigned char>(text[end]))) ++end;
                if (end == i) throw std::invalid_argument("bad cycle notation: " + text);
                const int pt = std::stoi(text.substr(i, end - i)) - 1;
                if (pt < 0 || pt >= degree)
                    throw std::invalid_argument("cycle point out of range: " + text);
                cyc.push_back(pt);
                i = end;
            }
            for (std::size_t k = 0; k < cyc.size(); ++k)
                p.img[static_cast<std::size_t>(cyc[k])] = cyc[(k + 1) % cyc.size()];
            skip_ws();
        }
        return p;
    }
};

/// y^{-1} x y
inline Permutation conjugate(const Permutation& x, const Permutation& y) {
    return y.inverse().then(x).then(y);
}

enum class QuandleKind { dihedral, conjugation, linear, loglinear, gaussian_ci, hamiltonian };

inline std::string kind_name(QuandleKind k) {
    switch (k) {
        case QuandleKind::dihedral: return "dihedral";
        case QuandleKind::conjugation: return "conjugation";
        case QuandleKind::linear: return "linear";
        case QuandleKind::loglinear: return "loglinear";
        case QuandleKind::gaussian_ci: return "gaussian-ci";
        case QuandleKind::hamiltonian: return "hamiltonian";
    }
    return "?";
}

/**
 * One member of the quandle catalog. The single integer parameter is the
 * modulus (dihedral), permutation degree (conjugation), vector dimension
 * (linear/loglinear), state dimension (gaussian-ci) or qubit count
 * (hamiltonian). Weighted kinds draw their operation family from weights
 * in the open interval (0,1), validated at use.
 */
struct QuandleInstance {
    QuandleKind kind = QuandleKind::dihedral;
    int param = 3;

    bool weighted() const {
        return kind == QuandleKind::linear || kind == QuandleKind::loglinear ||
               kind == QuandleKind::gaussian_ci || kind == QuandleKind::hamiltonian;
    }

    bool finite() const {
        return kind == QuandleKind::dihedral || kind == QuandleKind::conjugation;
    }

    long long carrier_size() const {
        if (kind == QuandleKind::dihedral) return param;
        if (kind == QuandleKind::conjugation) {
            long long f = 1;
            for (int i = 2; i <= param; ++i) f *= i;
            return f;
        }
        throw std::logic_error("carrier_size: infinite carrier");
    }

    std::string spec_string() const { return kind_name(kind) + " " + std::to_string(param); }

    bool operator==(const QuandleInstance&) const = default;

    static QuandleInstance dihedral(int n) {
        if (n < 2) throw std::invalid_argument("dihedral order must be >= 2");
        return {QuandleKind::dihedral, n};
    }
    static QuandleInstance conjugation(int d) {
        if (d < 1) throw std::invalid_argument("conjugation degree must be >= 1");
        return {QuandleKind::conjugation, d};
    }
    static QuandleInstance linear(int m) {
        if (m < 1) throw std::invalid_argument("linear dimension must be >= 1");
        return {QuandleKind::linear, m};
    }
    static QuandleInstance loglinear(int m) {
        if (m < 1) throw std::invalid_argument("loglinear dimension must be >= 1");
        return {QuandleKind::loglinear, m};
    }
    static QuandleInstance gaussian_ci(int d) {
        if (d < 1) throw std::invalid_argument("gaussian-ci dimension must be >= 1");
        return {QuandleKind::gaussian_ci, d};
    }
    static QuandleInstance hamiltonian(int n) {
        if (n < 1) throw std::invalid_argument("hamiltonian qubit count must be >= 1");
        return {QuandleKind::hamiltonian, n};
    }

    /// Parses "dihedral 3", "gaussian-ci 2", ...
    static QuandleInstance parse(const std::string& text) {
        std::istringstream in(text);
        std::string word;
        int p = 0;
        if (!(in >> word >> p)) throw std::invalid_argument("bad quandle spec: " + text);
        std::string rest;
        if (in >> rest) throw std::invalid_argument("bad quandle spec: " + text);
        if (word == "dihedral") return dihedral(p);
        if (word == "conjugation") return conjugation(p);
        if (word == "linear") return linear(p);
        if (word == "loglinear") return loglinear(p);
        if (word == "gaussian-ci") return gaussian_ci(p);
        if (word == "hamiltonian") return hamiltonian(p);
        throw std::invalid_argument("unknown quandle kind: " + word);
    }
};

/// A colour: the payload variant matching the owning quandle kind.
using Element = std::variant<long, Permutation, Eigen::VectorXd, GaussianEstimator,
                             Eigen::MatrixXcd>;

inline void require_element(const QuandleInstance& q, const Element& e) {
    switch (q.kind) {
        case QuandleKind::dihedral: {
            const long* v = std::get_if<long>(&e);
            if (!v) throw std::invalid_argument("element is not a dihedral residue");
            if (*v < 0 || *v >= q.param)
                throw std::invalid_argument("residue out of range mod " + std::to_string(q.param));
            return;
        }
        case QuandleKind::conjugation: {
            const Permutation* p = std::get_if<Permutation>(&e);
            if (!p || p->degree() != q.param)
                throw std::invalid_argument("element is not a permutation of degree " +
                                            std::to_string(q.param));
            return;
        }
        case QuandleKind::linear:
        case QuandleKind::loglinear: {
            const Eigen::VectorXd* v = std::get_if<Eigen::VectorXd>(&e);
            if (!v || v->size() != q.param)
                throw std::invalid_argument("element is not a vector of dimension " +
                                            std::to_string(q.param));
            if (q.kind == QuandleKind::loglinear && v->minCoeff() <= 0.0)
                throw std::invalid_argument("loglinear colours must be strictly positive");
            return;
        }
        case QuandleKind::gaussian_ci: {
            const GaussianEstimator* g = std::get_if<GaussianEstimator>(&e);
            if (!g || g->dim() != q.param)
                throw std::invalid_argument("element is not a Gaussian estimator of dimension " +
                                            std::to_string(q.param));
            require_estimator(*g, "gaussian-ci element");
            return;
        }
        case QuandleKind::hamiltonian: {
            const Eigen::MatrixXcd* m = std::get_if<Eigen::MatrixXcd>(&e);
            const long dim = 1L << q.param;
            if (!m || m->rows() != dim || m->cols() != dim)
                throw std::invalid_argument("element is not a 2^" + std::to_string(q.param) +
                                            " square matrix");
            if (max_abs((*m - m->adjoint()).eval()) > 1e-12 * std::max(1.0, max_abs(*m)))
                throw std::invalid_argument("hamiltonian colour is not Hermitian");
            return;
        }
    }
}

inline double checked_weight(const QuandleInstance& q, std::optional<double> w,
                             const std::string& what) {
    if (!q.weighted()) return 0.0;  // single-operation kinds ignore weights
    if (!w) throw std::invalid_argument(what + ": " + kind_name(q.kind) + " ops need a weight");
    if (!(*w > 0.0 && *w < 1.0))
        throw std::invalid_argument(what + ": weight " + format_double(*w) +
                                    " outside the domain (0,1)");
    return *w;
}

/// x > y, the quandle operation (with weight w for the weighted kinds).
inline Element apply(const QuandleInstance& q, const Element& x, const Element& y,
                     std::optional<double> w = std::nullopt) {
    require_element(q, x);
    require_element(q, y);
    switch (q.kind) {
        case QuandleKind::dihedral: {
            const long a = std::get<long>(x), b = std::get<long>(y);
            return ((2 * b - a) % q.param + q.param) % q.param;
        }
        case QuandleKind::conjugation:
            return conjugate(std::get<Permutation>(x), std::get<Permutation>(y));
        case QuandleKind::linear: {
            const double omega = checked_weight(q, w, "apply");
            return Eigen::VectorXd((1.0 - omega) * std::get<Eigen::VectorXd>(x) +
                                   omega * std::get<Eigen::VectorXd>(y));
        }
        case QuandleKind::loglinear: {
            const double omega = checked_weight(q, w, "apply");
            const Eigen::VectorXd& a = std::get<Eigen::VectorXd>(x);
            const Eigen::VectorXd& b = std::get<Eigen::VectorXd>(y);
            return Eigen::VectorXd(a.array().pow(1.0 - omega) * b.array().pow(omega));
        }
        case QuandleKind::gaussian_ci: {
            const double omega = checked_weight(q, w, "apply");
            return ci_fuse(std::get<GaussianEstimator>(x), std::get<GaussianEstimator>(y), omega);
        }
        case QuandleKind::hamiltonian: {
            const double omega = checked_weight(q, w, "apply");
            return Eigen::MatrixXcd((1.0 - omega) * std::get<Eigen::MatrixXcd>(x) +
                                    omega * std::get<Eigen::MatrixXcd>(y));
        }
    }
    throw std::logic_error("apply: unreachable");
}

/// The unique x with apply(x, y, w) == z.
inline Element unapply(const QuandleInstance& q, const Element& z, const Element& y,
                       std::optional<double> w = std::nullopt) {
    require_element(q, z);
    require_element(q, y);
    switch (q.kind) {
        case QuandleKind::dihedral: {
            const long c = std::get<long>(z), b = std::get<long>(y);
            return ((2 * b - c) % q.param + q.param) % q.param;
        }
        case QuandleKind::conjugation: {
            const Permutation& c = std::get<Permutation>(z);
            const Permutation& b = std::get<Permutation>(y);
            return b.then(c).then(b.inverse());  // y z y^{-1}
        }
        case QuandleKind::linear: {
            const double omega = checked_weight(q, w, "unapply");
            return Eigen::VectorXd((std::get<Eigen::VectorXd>(z) -
                                    omega * std::get<Eigen::VectorXd>(y)) /
                                   (1.0 - omega));
        }
        case QuandleKind::loglinear: {
            const double omega = checked_weight(q, w, "unapply");
            const Eigen::VectorXd& c = std::get<Eigen::VectorXd>(z);
            const Eigen::VectorXd& b = std::get<Eigen::VectorXd>(y);
            return Eigen::VectorXd(
                ((c.array().log() - omega * b.array().log()) / (1.0 - omega)).exp());
        }
        case QuandleKind::gaussian_ci: {
            const double omega = checked_weight(q, w, "unapply");
            return ci_unfuse(std::get<GaussianEstimator>(z), std::get<GaussianEstimator>(y),
                             omega);
        }
        case QuandleKind::hamiltonian: {
            const double omega = checked_weight(q, w, "unapply");
            return Eigen::MatrixXcd((std::get<Eigen::MatrixXcd>(z) -
                                     omega * std::get<Eigen::MatrixXcd>(y)) /
                                    (1.0 - omega));
        }
    }
    throw std::logic_error("unapply: unreachable");
}

/// Exact for finite carriers, relative tolerance elsewhere.
inline bool elements_equal(const QuandleInstance& q, const Element& a, const Element& b,
                           double tol = 1e-9) {
    switch (q.kind) {
        case QuandleKind::dihedral: return std::get<long>(a) == std::get<long>(b);
        case QuandleKind::conjugation: return std::get<Permutation>(a) == std::get<Permutation>(b);
        case QuandleKind::linear:
        case QuandleKind::loglinear: {
            const Eigen::VectorXd& u = std::get<Eigen::VectorXd>(a);
            const Eigen::VectorXd& v = std::get<Eigen::VectorXd>(b);
            return max_abs((u - v).eval()) <= tol * std::max({1.0, max_abs(u), max_abs(v)});
        }
        case QuandleKind::gaussian_ci: {
            const GaussianEstimator& u = std::get<GaussianEstimator>(a);
            const GaussianEstimator& v = std::get<GaussianEstimator>(b);
            const double scale = std::max({1.0, max_abs(u.mean), max_abs(u.cov)});
            return max_abs((u.mean - v.mean).eval()) <= tol * scale &&
                   max_abs((u.cov - v.cov).eval()) <= tol * scale;
        }
        case QuandleKind::hamiltonian: {
            const Eigen::MatrixXcd& u = std::get<Eigen::MatrixXcd>(a);
            const Eigen::MatrixXcd& v = std::get<Eigen::MatrixXcd>(b);
            return max_abs((u - v).eval()) <= tol * std::max({1.0, max_abs(u), max_abs(v)});
        }
    }
    return false;
}

/// All elements of a finite carrier, in a fixed deterministic order.
inline std::vector<Element> carrier(const QuandleInstance& q) {
    std::vector<Element> out;
    if (q.kind == QuandleKind::dihedral) {
        for (long i = 0; i < q.param; ++i) out.emplace_back(i);
        return out;
    }
    if (q.kind == QuandleKind::conjugation) {
        std::vector<int> img(q.param);
        std::iota(img.begin(), img.end(), 0);
        do {
            Permutation p;
            p.img = img;
            out.emplace_back(std::move(p));
        } while (std::next_permutation(img.begin(), img.end()));
        return out;
    }
    throw std::invalid_argument("carrier: " + kind_name(q.kind) + " is not finite");
}

/// Seeded sample from the carrier (continuous kinds).
inline Element sample_element(const QuandleInstance& q, Rng& rng) {
    switch (q.kind) {
        case QuandleKind::dihedral: return static_cast<long>(rng.below(q.param));
        case QuandleKind::conjugation: {
            Permutation p = Permutation::identity(q.param);
            for (int i = q.param - 1; i > 0; --i)
                std::swap(p.img[i], p.img[rng.below(static_cast<std::uint64_t>(i) + 1)]);
            return p;
        }
        case QuandleKind::linear: return random_vector(rng, q.param);
        case QuandleKind::loglinear:
            return Eigen::VectorXd(random_vector(rng, q.param).array().exp());
        case QuandleKind::gaussian_ci: {
            GaussianEstimator g;
            g.mean = random_vector(rng, q.param);
            g.cov = random_spd(rng, q.param);
            return g;
        }
        case QuandleKind::hamiltonian: {
            const long dim = 1L << q.param;
            Eigen::MatrixXcd m(dim, dim);
            for (long i = 0; i < dim; ++i)
                for (long j = 0; j < dim; ++j)
                    m(i, j) = std::complex<double>(rng.normal(), rng.normal());
            return Eigen::MatrixXcd(0.5 * (m + m.adjoint()));
        }
    }
    throw std::logic_error("sample_element: unreachable");
}

// --- axiom verification -----------------------------------------------------

struct SamplePlan {
    bool exhaustive = true;
    int count = 500;
    std::uint64_t seed = 0;
};

struct AxiomReport {
    struct Law {
        std::string name;
        bool pass = true;
        double max_err = 0.0;
        std::string counterexample;
    };
    std::vector<Law> laws;

    bool all_pass() const {
        for (const Law& l : laws)
            if (!l.pass) return false;
        return true;
    }
};

using QuandleOp =
    std::function<Element(const Element&, const Element&, std::optional<double>)>;
using ElementEq = std::function<bool(const Element&, const Element&)>;

/**
 * Checks idempotence, right-translation bijectivity and two-weight
 * self-distributivity over supplied sample triples and weight pairs.
 * The operations are taken as arguments so that deliberately broken
 * operation tables can be probed by the same machinery.
 */
inline AxiomReport verify_axiom_laws(const QuandleOp& op, const QuandleOp& inv,
                                     const std::vector<std::array<Element, 3>>& triples,
                                     const std::vector<std::array<std::optional<double>, 2>>& weights,
                                     const ElementEq& equal) {
    AxiomReport rep;
    AxiomReport::Law idem{"idempotence", true, 0.0, ""};
    AxiomReport::Law bij{"bijectivity", true, 0.0, ""};
    AxiomReport::Law dist{"self-distributivity", true, 0.0, ""};
    std::size_t wi = 0;
    auto next_weights = [&]() -> std::array<std::optional<double>, 2> {
        if (weights.empty()) return {std::nullopt, std::nullopt};
        return weights[wi++ % weights.size()];
    };
    std::size_t index = 0;
    for (const auto& t : triples) {
        const auto [w, wprime] = next_weights();
        const Element& x = t[0];
        const Element& y = t[1];
        const Element& z = t[2];
        if (idem.pass && !equal(op(x, x, w), x)) {
            idem.pass = false;
            idem.counterexample = "triple #" + std::to_string(index);
        }
        if (bij.pass && (!equal(inv(op(x, y, w), y, w), x) || !equal(op(inv(z, y, w), y, w), z))) {
            bij.pass = false;
            bij.counterexample = "triple #" + std::to_string(index);
        }
        if (dist.pass &&
            !equal(op(op(x, y, wprime), z, w), op(op(x, z, w), op(y, z, w), wprime))) {
            dist.pass = false;
            dist.counterexample = "triple #" + std::to_string(index);
        }
        ++index;
    }
    rep.laws = {idem, bij, dist};
    return rep;
}

/**
 * Axiom check for a catalog quandle: exhaustive on small finite carriers
 * (order <= 32), seeded random sampling with relative tolerance tol on
 * everything else.
 */
inline AxiomReport verify_axioms(const QuandleInstance& q, const SamplePlan& plan,
                                 double tol = 1e-9) {
    std::vector<std::array<Element, 3>> triples;
    std::vector<std::array<std::optional<double>, 2>> weights;
    Rng rng(plan.seed);
    if (q.finite() && plan.exhaustive) {
        if (q.carrier_size() > 32)
            throw std::invalid_argument("exhaustive check limited to carriers of order <= 32");
        const std::vector<Element> all = carrier(q);
        for (const Element& x : all)
            for (const Element& y : all)
                for (const Element& z : all) triples.push_back({x, y, z});
    } else {
        for (int i = 0; i < plan.count; ++i)
            triples.push_back({sample_element(q, rng), sample_element(q, rng),
                               sample_element(q, rng)});
    }
    if (q.weighted()) {
        const std::size_t n = std::max<std::size_t>(triples.size(), 1);
        for (std::size_t i = 0; i < n; ++i)
            weights.push_back({rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95)});
    }
    auto op = [&](const Element& a, const Element& b, std::optional<double> w) {
        return apply(q, a, b, w);
    };
    auto inv = [&](const Element& a, const Element& b, std::optional<double> w) {
        return unapply(q, a, b, w);
    };
    auto eq = [&](const Element& a, const Element& b) { return elements_equal(q, a, b, tol); };
    return verify_axiom_laws(op, inv, triples, weights, eq);
}

} // namespace tangleforge
