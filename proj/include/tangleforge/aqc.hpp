#pragma once

#include "tangleforge/numeric.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace tangleforge {

using Hmat = Eigen::MatrixXcd;

inline long hilbert_dim(int qubits) { return 1L << qubits; }

inline bool is_hermitian(const Hmat& m, double tol = 1e-12) {
    return m.rows() == m.cols() &&
           max_abs((m - m.adjoint()).eval()) <= tol * std::max(1.0, max_abs(m));
}

inline void require_hermitian(const Hmat& m, const std::string& what, double tol = 1e-12) {
    if (!is_hermitian(m, tol)) throw std::invalid_argument(what + ": operator not Hermitian");
}

inline Eigen::Matrix2cd pauli_x() {
    Eigen::Matrix2cd x;
    x << 0, 1, 1, 0;
    return x;
}

inline Eigen::Matrix2cd pauli_z() {
    Eigen::Matrix2cd z;
    z << 1, 0, 0, -1;
    return z;
}

/// I ⊗ .. ⊗ op ⊗ .. ⊗ I with op at `site`; site 0 is the leftmost factor.
inline Hmat embed_site(const Eigen::Matrix2cd& op, int n, int site) {
    if (site < 0 || site >= n) throw std::invalid_argument("embed_site: site out of range");
    Hmat acc = Hmat::Identity(1, 1);
    for (int k = 0; k < n; ++k) {
        const Hmat factor = k == site ? Hmat(op) : Hmat(Hmat::Identity(2, 2));
        Hmat next(acc.rows() * factor.rows(), acc.cols() * factor.cols());
        for (long i = 0; i < acc.rows(); ++i)
            for (long j = 0; j < acc.cols(); ++j)
                next.block(i * factor.rows(), j * factor.cols(), factor.rows(), factor.cols()) =
                    acc(i, j) * factor;
        acc = std::move(next);
    }
    return acc;
}

/// P_x^j = (1 - (-1)^j X)/2 embedded at `site`; rank 2^(n-1) projector.
inline Hmat projector_x(int j, int n, int site) {
    const double sign = j % 2 == 0 ? 1.0 : -1.0;
    const Eigen::Matrix2cd p = 0.5 * (Eigen::Matrix2cd::Identity() - sign * pauli_x());
    return embed_site(p, n, site);
}

/// P_z = (I - Z)/2 embedded at `site`; picks out the |1> state of the site.
inline Hmat projector_z(int n, int site) {
    const Eigen::Matrix2cd p = 0.5 * (Eigen::Matrix2cd::Identity() - pauli_z());
    return embed_site(p, n, site);
}

/// Logical OR of two commuting projectors: A + B - AB.
inline Hmat or_projector(const Hmat& a, const Hmat& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::invalid_argument("or_projector: dimension mismatch");
    return a + b - a * b;
}

/// (1-s) h0 + s h1 — the interpolation fusion; endpoints s = 0, 1 allowed.
inline Hmat fuse_h(const Hmat& h0, const Hmat& h1, double s) {
    if (h0.rows() != h1.rows() || h0.cols() != h1.cols())
        throw std::invalid_argument("fuse_h: dimension mismatch");
    if (!(s >= 0.0 && s <= 1.0)) throw std::invalid_argument("fuse_h: s outside [0,1]");
    return (1.0 - s) * h0 + s * h1;
}

/**
 * Per-frame deformed times t_i = scale_i * min(1, alpha^{-i} t). Small
 * alpha pulls later frames forward so that nested fusions overlap less;
 * alpha -> 0 recovers sequential execution.
 */
struct FrameClock {
    double alpha = 0.5;
    std::vector<double> scales = {1.0};

    int frames() const { return static_cast<int>(scales.size()); }

    double frame_time(int i, double t) const {
        if (i < 0 || i >= frames()) throw std::invalid_argument("frame_time: frame out of range");
        if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("frame_time: t outside [0,1]");
        if (!(alpha > 0.0 && alpha < 1.0))
            throw std::invalid_argument("frame_time: alpha outside (0,1)");
        return scales[static_cast<std::size_t>(i)] * std::min(1.0, std::pow(alpha, -i) * t);
    }
};

/**
 * Expression tree of nested fusions over named Hermitian generators.
 * A fuse node draws its interpolation parameter from its time rule:
 *   frame i    s = clock.frame_time(i, t)        written  fuse@i
 *   half_t     s = t/2                           written  fuse@star
 *   cap_t c    s = min(c, t)                     written  fuse@cap:c
 */
class ScheduleExpr {
public:
    enum class Rule { frame, half_t, cap_t };

    static ScheduleExpr leaf(const std::string& name) {
        ScheduleExpr e;
        e.root_ = std::make_shared<Node>(Node{name, Rule::frame, 0, 0.0, nullptr, nullptr});
        return e;
    }
    static ScheduleExpr fuse(int frame, ScheduleExpr a, ScheduleExpr b) {
        ScheduleExpr e;
        e.root_ = std::make_shared<Node>(Node{"", Rule::frame, frame, 0.0, a.root_, b.root_});
        return e;
    }
    static ScheduleExpr fuse_star(ScheduleExpr a, ScheduleExpr b) {
        ScheduleExpr e;
        e.root_ = std::make_shared<Node>(Node{"", Rule::half_t, 0, 0.0, a.root_, b.root_});
        return e;
    }
    static ScheduleExpr fuse_capped(double cap, ScheduleExpr a, ScheduleExpr b) {
        ScheduleExpr e;
        e.root_ = std::make_shared<Node>(Node{"", Rule::cap_t, 0, cap, a.root_, b.root_});
        return e;
    }

    bool valid() const { return root_ != nullptr; }

    std::string to_string() const {
        std::ostringstream out;
        print(root_.get(), out);
        return out.str();
    }

    /// Prefix form: name | (fuse@<i> a b) | (fuse@star a b) | (fuse@cap:<c> a b)
    static ScheduleExpr parse(const std::string& text) {
        std::vector<std::string> tok;
        std::string cur;
        for (char ch : text) {
            if (ch == '(' || ch == ')') {
                if (!cur.empty()) {
                    tok.push_back(cur);
                    cur.clear();
                }
                tok.push_back(std::string(1, ch));
            } else if (std::isspace(static_cast<unsigned char>(ch))) {
                if (!cur.empty()) {
                    tok.push_back(cur);
                    cur.clear();
                }
            } else {
                cur += ch;
            }
        }
        if (!cur.empty()) tok.push_back(cur);
        std::size_t pos = 0;
        ScheduleExpr e = parse_tokens(tok, pos);
        if (pos != tok.size()) throw std::invalid_argument("trailing tokens in schedule expression");
        return e;
    }

    struct Node {
        std::string name;  // leaf generator name; empty for fuse nodes
        Rule rule = Rule::frame;
        int frame = 0;
        double cap = 0.0;
        std::shared_ptr<const Node> lhs, rhs;
        bool is_leaf() const { return lhs == nullptr; }
    };

    const Node* root() const { return root_.get(); }

private:
    std::shared_ptr<const Node> root_;

    static void print(const Node* n, std::ostringstream& out) {
        if (n->is_leaf()) {
            out << n->name;
            return;
        }
        out << "(fuse@";
        if (n->rule == Rule::frame)
            out << n->frame;
        else if (n->rule == Rule::half_t)
            out << "star";
        else
            out << "cap:" << format_double(n->cap);
        out << " ";
        print(n->lhs.get(), out);
        out << " ";
        print(n->rhs.get(), out);
        out << ")";
    }

    static ScheduleExpr parse_tokens(const std::vector<std::string>& tok, std::size_t& pos) {
        if (pos >= tok.size()) throw std::invalid_argument("truncated schedule expression");
        if (tok[pos] != "(") {
            if (tok[pos] == ")") throw std::invalid_argument("unexpected ')'");
            return leaf(tok[pos++]);
        }
        ++pos;  // '('
        if (pos >= tok.size() || tok[pos].rfind("fuse@", 0) != 0)
            throw std::invalid_argument("expected fuse@... after '('");
        const std::string tag = tok[pos++].substr(5);
        ScheduleExpr a = parse_tokens(tok, pos);
        ScheduleExpr b = parse_tokens(tok, pos);
        if (pos >= tok.size() || tok[pos] != ")")
            throw std::invalid_argument("expected ')' in schedule expression");
        ++pos;
        if (tag == "star") return fuse_star(a, b);
        if (tag.rfind("cap:", 0) == 0) return fuse_capped(std::stod(tag.substr(4)), a, b);
        try {
            return fuse(std::stoi(tag), a, b);
        } catch (const std::exception&) {
            throw std::invalid_argument("bad fuse tag '@" + tag + "'");
        }
    }
};

using OperatorCatalog = std::map<std::string, Hmat>;

inline Hmat eval_schedule(const ScheduleExpr& expr, double t, const FrameClock& clock,
                          const OperatorCatalog& ops) {
    if (!expr.valid()) throw std::invalid_argument("eval_schedule: empty expression");
    auto rec = [&](auto&& self, const ScheduleExpr::Node* n) -> Hmat {
        if (n->is_leaf()) {
            auto it = ops.find(n->name);
            if (it == ops.end())
                throw std::invalid_argument("eval_schedule: unknown generator '" + n->name + "'");
            return it->second;
        }
        double s = 0.0;
        switch (n->rule) {
            case ScheduleExpr::Rule::frame: s = clock.frame_time(n->frame, t); break;
            case ScheduleExpr::Rule::half_t: s = 0.5 * t; break;
            case ScheduleExpr::Rule::cap_t: s = std::min(n->cap, t); break;
        }
        return fuse_h(self(self, n->lhs.get()), self(self, n->rhs.get()), s);
    };
    return rec(rec, expr.root());
}

struct GapProfile {
    std::vector<double> t;
    std::vector<double> ground;
    std::vector<double> gap;
    std::vector<int> degeneracy;
    double g_min = std::numeric_limits<double>::infinity();
    double t_at_gmin = 0.0;
    double computation_time = std::numeric_limits<double>::infinity();
};

/**
 * Dense Hermitian eigensolve along a uniform grid on [0,1]. The
 * effective gap at each point is measured from the ground cluster
 * (eigenvalues within degeneracy_tol of the lowest) to the first level
 * above it. g_min is taken over interior grid points only, since the
 * final Hamiltonian may be exactly degenerate; computation time is
 * 1/g_min^2 with unit proportionality constant.
 */
inline GapProfile gap_profile(const ScheduleExpr& expr, const FrameClock& clock,
                              const OperatorCatalog& ops, int grid,
                              double degeneracy_tol = 1e-8) {
    if (grid < 16) throw std::invalid_argument("gap_profile: grid must be >= 16");
    for (const auto& [name, h] : ops) {
        if (h.rows() > (1L << 10))
            throw std::invalid_argument("gap_profile: dimension above 2^10 cap");
        require_hermitian(h, "gap_profile generator '" + name + "'");
    }
    GapProfile prof;
    for (int k = 0; k < grid; ++k) {
        const double t = static_cast<double>(k) / (grid - 1);
        const Hmat h = eval_schedule(expr, t, clock, ops);
        Eigen::SelfAdjointEigenSolver<Hmat> es(h, Eigen::EigenvaluesOnly);
        const Eigen::VectorXd ev = es.eigenvalues();
        const double lam0 = ev[0];
        int deg = 1;
        while (deg < ev.size() && ev[deg] <= lam0 + degeneracy_tol) ++deg;
        const double g = deg < ev.size() ? ev[deg] - lam0 : 0.0;
        prof.t.push_back(t);
        prof.ground.push_back(lam0);
        prof.gap.push_back(g);
        prof.degeneracy.push_back(deg);
        if (t > 0.0 && t < 1.0 && g < prof.g_min) {
            prof.g_min = g;
            prof.t_at_gmin = t;
        }
    }
    if (prof.g_min > 0.0 && std::isfinite(prof.g_min))
        prof.computation_time = 1.0 / (prof.g_min * prof.g_min);
    return prof;
}

/// S(l) = -l^2 log l^2 - (1-l^2) log(1-l^2), the entanglement entropy of
/// l|00> + sqrt(1-l^2)|11>; peaks at log 2 for l = 1/sqrt(2).
inline double entanglement_entropy(double lambda) {
    if (!(lambda > 0.0 && lambda < 1.0))
        throw std::invalid_argument("entanglement_entropy: lambda outside (0,1)");
    const double p = lambda * lambda;
    return -p * std::log(p) - (1.0 - p) * std::log(1.0 - p);
}

/**
 * Two-qubit product-to-entangled evolution. Generators:
 *   PX0xI = P_x^0 at site 0, IxPX1 = P_x^1 at site 1,
 *   H0 = (1-a) PX0xI + a IxPX1 (ground state |01>_x),
 *   H1 = 1 - |v><v| with v = lambda|00> + sqrt(1-lambda^2)|11>.
 * Clock: t_0 = t, t_1 = a min(1, t/alpha).
 */
struct EntangleProblem {
    OperatorCatalog ops;
    FrameClock clock;
    ScheduleExpr standard, o1, o1prime, no_deformation;
    double a = 0.95, lambda = 0.5;
};

inline EntangleProblem build_entanglement_problem(double a, double lambda, double alpha = 0.5) {
    if (!(a > 0.0 && a < 1.0)) throw std::invalid_argument("entanglement problem: a outside (0,1)");
    if (!(lambda > 0.0 && lambda < 1.0))
        throw std::invalid_argument("entanglement problem: lambda outside (0,1)");
    EntangleProblem prob;
    prob.a = a;
    prob.lambda = lambda;
    const Hmat px0 = projector_x(0, 2, 0);
    const Hmat px1 = projector_x(1, 2, 1);
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(4);
    v[0] = lambda;
    v[3] = std::sqrt(1.0 - lambda * lambda);
    prob.ops["PX0xI"] = px0;
    prob.ops["IxPX1"] = px1;
    prob.ops["H0"] = (1.0 - a) * px0 + a * px1;
    prob.ops["H1"] = Hmat::Identity(4, 4) - v * v.adjoint();
    prob.clock = FrameClock{alpha, {1.0, a}};
    using E = ScheduleExpr;
    prob.standard = E::fuse(0, E::leaf("H0"), E::leaf("H1"));
    prob.o1 = E::fuse(0, E::fuse(1, E::leaf("PX0xI"), E::leaf("IxPX1")), E::leaf("H1"));
    prob.o1prime =
        E::fuse(0, E::fuse(1, E::leaf("PX0xI"), E::leaf("H1")),
                E::fuse(1, E::leaf("IxPX1"), E::leaf("H1")));
    prob.no_deformation =
        E::fuse(0, E::fuse_capped(a, E::leaf("PX0xI"), E::leaf("IxPX1")), E::leaf("H1"));
    return prob;
}

/**
 * Four-qubit 2-SAT instance ((x1 and x2) or (not x1 and not x2)) and
 * ((x3 and x4) or (not x3 and not x4)); satisfied by 0000, 0011, 1100,
 * 1111. Generators:
 *   H0       = (1/4) sum of P_x^0 over the four sites (ground |0000>_x)
 *   Horacle  = 1 - |v><v|, v uniform over the four assignments
 *   H1       = 1 - (1/4)[Pz^4 + Pz^2(1-Pz)^2 + (1-Pz)^2Pz^2 + (1-Pz)^4]
 *   A1..A4   = the four clause complements fused by G(t)
 * G(t) combines A1..A4 with the s = t/2 rule and tends to H1 as t -> 1.
 */
struct TwoSatProblem {
    OperatorCatalog ops;
    FrameClock clock;
    ScheduleExpr g, standard_h1, standard_g, o1, o1prime, o1_g, o1prime_g;
};

inline TwoSatProblem build_twosat_problem(double alpha = 0.5) {
    TwoSatProblem prob;
    const int n = 4;
    const long dim = hilbert_dim(n);
    Hmat h0 = Hmat::Zero(dim, dim);
    for (int site = 0; site < n; ++site) h0 += 0.25 * projector_x(0, n, site);
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(dim);
    v[0b0000] = 0.5;
    v[0b0011] = 0.5;
    v[0b1100] = 0.5;
    v[0b1111] = 0.5;
    const Hmat id = Hmat::Identity(dim, dim);
    const Hmat pz0 = projector_z(n, 0), pz1 = projector_z(n, 1);
    const Hmat pz2 = projector_z(n, 2), pz3 = projector_z(n, 3);
    const Hmat front_and = pz0 * pz1;
    const Hmat front_nand = (id - pz0) * (id - pz1);
    const Hmat back_and = pz2 * pz3;
    const Hmat back_nand = (id - pz2) * (id - pz3);
    prob.ops["H0"] = h0;
    prob.ops["Horacle"] = id - v * v.adjoint();
    prob.ops["H1"] =
        id - 0.25 * (front_and * back_and + front_and * back_nand + front_nand * back_and +
                     front_nand * back_nand);
    prob.ops["A1"] = id - front_and * back_and;
    prob.ops["A2"] = id - front_and * back_nand;
    prob.ops["A3"] = id - front_nand * back_and;
    prob.ops["A4"] = id - front_nand * back_nand;
    prob.clock = FrameClock{alpha, {1.0, 1.0}};
    using E = ScheduleExpr;
    prob.g = E::fuse_star(E::fuse_star(E::leaf("A1"), E::leaf("A2")),
                          E::fuse_star(E::leaf("A3"), E::leaf("A4")));
    prob.standard_h1 = E::fuse(0, E::leaf("H0"), E::leaf("H1"));
    prob.standard_g = E::fuse(0, E::leaf("H0"), prob.g);
    prob.o1 = E::fuse(0, E::fuse(1, E::leaf("H0"), E::leaf("Horacle")), E::leaf("H1"));
    prob.o1prime = E::fuse(0, E::fuse(1, E::leaf("H0"), E::leaf("H1")),
                           E::fuse(1, E::leaf("Horacle"), E::leaf("H1")));
    prob.o1_g = E::fuse(0, E::fuse(1, E::leaf("H0"), E::leaf("Horacle")), prob.g);
    prob.o1prime_g = E::fuse(0, E::fuse(1, E::leaf("H0"), prob.g),
                             E::fuse(1, E::leaf("Horacle"), prob.g));
    return prob;
}

} // namespace tangleforge
