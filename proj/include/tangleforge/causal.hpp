#pragma once

#include "tangleforge/numeric.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace tangleforge {

/// Named equal-length real time series, one column per series.
struct TimeSeriesPanel {
    std::vector<std::string> names;
    Eigen::MatrixXd data;  // T x k
    double sample_period = 1.0;

    int length() const { return static_cast<int>(data.rows()); }
    int series() const { return static_cast<int>(data.cols()); }

    int index_of(const std::string& name) const {
        for (std::size_t i = 0; i < names.size(); ++i)
            if (names[i] == name) return static_cast<int>(i);
        throw std::invalid_argument("no series named '" + name + "'");
    }
};

inline void require_triangle_panel(const TimeSeriesPanel& panel, int p) {
    if (panel.series() != 3)
        throw std::invalid_argument("triangle detection needs exactly three series");
    if (p < 1) throw std::invalid_argument("lag order must be >= 1");
    if (panel.length() < 10 * p)
        throw std::invalid_argument("panel too short: need at least 10*p samples");
    if (!panel.data.allFinite()) throw std::invalid_argument("panel contains non-finite values");
}

/**
 * Lagged least-squares fit of the triangular model: each series is
 * regressed on the lag blocks of the other two (no own lags, no
 * intercept). blocks["A->B"] holds the length-p coefficient vector of
 * A's lags in B's equation.
 */
struct TriangleFit {
    int p = 1;
    std::map<std::string, Eigen::VectorXd> blocks;
    std::map<std::string, double> resid_var;
};

inline TriangleFit fit_triangle(const TimeSeriesPanel& panel, int p) {
    require_triangle_panel(panel, p);
    const int T = panel.length();
    const int rows = T - p;
    TriangleFit fit;
    fit.p = p;
    for (int target = 0; target < 3; ++target) {
        std::vector<int> foreign;
        for (int i = 0; i < 3; ++i)
            if (i != target) foreign.push_back(i);
        Eigen::MatrixXd design(rows, 2 * p);
        Eigen::VectorXd y(rows);
        for (int r = 0; r < rows; ++r) {
            const int t = p + r;
            y[r] = panel.data(t, target);
            for (int j = 0; j < p; ++j) {
                design(r, j) = panel.data(t - 1 - j, foreign[0]);
                design(r, p + j) = panel.data(t - 1 - j, foreign[1]);
            }
        }
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
        qr.setThreshold(1e-10);
        if (qr.rank() < 2 * p)
            throw std::invalid_argument("rank-deficient design for target '" +
                                        panel.names[static_cast<std::size_t>(target)] + "'");
        const Eigen::VectorXd beta = qr.solve(y);
        fit.blocks[panel.names[static_cast<std::size_t>(foreign[0])] + "->" +
                   panel.names[static_cast<std::size_t>(target)]] = beta.head(p);
        fit.blocks[panel.names[static_cast<std::size_t>(foreign[1])] + "->" +
                   panel.names[static_cast<std::size_t>(target)]] = beta.tail(p);
        const double rss = (y - design * beta).squaredNorm();
        fit.resid_var[panel.names[static_cast<std::size_t>(target)]] =
            rss / std::max(1, rows - 2 * p);
    }
    return fit;
}

struct DirectedEdge {
    std::string from, to;
    double confidence = 0.0;
    bool tie = false;
};

struct DirectedTriangle {
    std::vector<std::string> names;
    std::vector<DirectedEdge> edges;  // one per unordered pair

    const DirectedEdge* edge_between(const std::string& a, const std::string& b) const {
        for (const DirectedEdge& e : edges)
            if ((e.from == a && e.to == b) || (e.from == b && e.to == a)) return &e;
        return nullptr;
    }
};

/**
 * Orients each pair toward the larger coefficient block norm;
 * confidence is the normalized norm margin. Exact ties keep the
 * name-order direction with zero confidence.
 */
inline DirectedTriangle orient(const TriangleFit& fit, const std::vector<std::string>& names) {
    if (names.size() != 3) throw std::invalid_argument("orient needs three series names");
    DirectedTriangle tri;
    tri.names = names;
    constexpr double eps = 1e-12;
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = i + 1; j < 3; ++j) {
            const std::string& a = names[i];
            const std::string& b = names[j];
            const double nab = fit.blocks.at(a + "->" + b).norm();
            const double nba = fit.blocks.at(b + "->" + a).norm();
            DirectedEdge e;
            e.from = nab >= nba ? a : b;
            e.to = nab >= nba ? b : a;
            e.confidence = std::abs(nab - nba) / (nab + nba + eps);
            e.tie = nab == nba;
            tri.edges.push_back(e);
        }
    return tri;
}

struct InteractionHypothesis {
    std::string agent, input, output;
    std::map<std::string, double> confidence;  // per oriented edge "A->B"
    bool ambiguous_order = false;
};

/**
 * Reads an interaction out of the oriented triangle: the agent is the
 * node driving both others; the patients' mutual edge fixes which is
 * the input and which the output, flagged ambiguous below the
 * confidence threshold. A cyclic orientation has no agent.
 */
inline InteractionHypothesis detect_interaction(const TimeSeriesPanel& panel, int p,
                                                double ambiguity_threshold = 0.1) {
    const TriangleFit fit = fit_triangle(panel, p);
    const DirectedTriangle tri = orient(fit, panel.names);
    std::map<std::string, int> outdeg;
    for (const DirectedEdge& e : tri.edges) outdeg[e.from] += 1;
    std::string agent;
    for (const std::string& n : panel.names)
        if (outdeg[n] == 2) agent = n;
    if (agent.empty())
        throw std::runtime_error("no agent structure: the oriented triangle is cyclic");
    std::vector<std::string> patients;
    for (const std::string& n : panel.names)
        if (n != agent) patients.push_back(n);
    const DirectedEdge* mutual = tri.edge_between(patients[0], patients[1]);
    InteractionHypothesis hyp;
    hyp.agent = agent;
    hyp.input = mutual->from;
    hyp.output = mutual->to;
    hyp.ambiguous_order = mutual->confidence < ambiguity_threshold;
    for (const DirectedEdge& e : tri.edges) hyp.confidence[e.from + "->" + e.to] = e.confidence;
    return hyp;
}

/**
 * Generative counterpart of fit_triangle: simulates the triangular
 * lag model (deterministic in the seed; one normal draw per series per
 * step in panel order). Rejects coefficient blocks whose companion
 * matrix has spectral radius >= 1.
 */
struct SynthSpec {
    std::vector<std::string> names = {"X", "Y", "Z"};
    int p = 2;
    int length = 1000;
    int burn_in = 200;
    std::map<std::string, Eigen::VectorXd> blocks;  // "A->B" -> length-p coefficients
    std::map<std::string, double> noise;            // per-series noise scale
};

inline Eigen::VectorXd synth_block(const SynthSpec& spec, const std::string& from,
                                   const std::string& to) {
    auto it = spec.blocks.find(from + "->" + to);
    if (it == spec.blocks.end()) return Eigen::VectorXd::Zero(spec.p);
    if (it->second.size() != spec.p)
        throw std::invalid_argument("block " + from + "->" + to + " must have length p");
    return it->second;
}

inline double synth_spectral_radius(const SynthSpec& spec) {
    const int p = spec.p;
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(3 * p, 3 * p);
    for (int lag = 0; lag < p; ++lag)
        for (int i = 0; i < 3; ++i)
            for (int f = 0; f < 3; ++f) {
                if (f == i) continue;
                companion(i, 3 * lag + f) =
                    synth_block(spec, spec.names[static_cast<std::size_t>(f)],
                                spec.names[static_cast<std::size_t>(i)])[lag];
            }
    for (int r = 3; r < 3 * p; ++r) companion(r, r - 3) = 1.0;
    return companion.eigenvalues().cwiseAbs().maxCoeff();
}

inline TimeSeriesPanel synth_panel(const SynthSpec& spec, std::uint64_t seed) {
    if (spec.names.size() != 3) throw std::invalid_argument("synth_panel needs three names");
    if (spec.p < 1) throw std::invalid_argument("synth_panel: p must be >= 1");
    if (spec.length < 10 * spec.p)
        throw std::invalid_argument("synth_panel: length must be at least 10*p");
    const double radius = synth_spectral_radius(spec);
    if (radius >= 1.0 - 1e-9)
        throw std::invalid_argument("unstable coefficient spec: spectral radius " +
                                    format_double(radius));
    Rng rng(seed);
    const int total = spec.length + spec.burn_in;
    Eigen::MatrixXd data = Eigen::MatrixXd::Zero(total, 3);
    for (int t = 0; t < total; ++t)
        for (int i = 0; i < 3; ++i) {
            double v = 0.0;
            for (int f = 0; f < 3; ++f) {
                if (f == i) continue;
                const Eigen::VectorXd b = synth_block(spec, spec.names[static_cast<std::size_t>(f)],
                                                      spec.names[static_cast<std::size_t>(i)]);
                for (int lag = 1; lag <= spec.p; ++lag)
                    if (t - lag >= 0) v += b[lag - 1] * data(t - lag, f);
            }
            double scale = 1.0;
            if (auto it = spec.noise.find(spec.names[static_cast<std::size_t>(i)]);
                it != spec.noise.end())
                scale = it->second;
            data(t, i) = v + scale * rng.normal();
        }
    TimeSeriesPanel panel;
    panel.names = spec.names;
    panel.data = data.bottomRows(spec.length);
    return panel;
}

} // namespace tangleforge
