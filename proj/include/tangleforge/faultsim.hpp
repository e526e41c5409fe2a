#pragma once

#include "tangleforge/fusion.hpp"

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

namespace tangleforge {

/**
 * Fault codes for a three-stream fusion network. The three digits, read
 * left to right, describe streams z, y, x (edges 2, 1, 0); an X marks a
 * faulty stream at that step.
 */
enum class FaultCode { f000, f00X, f0X0, fX00, fX0X, f0XX };

inline FaultCode parse_fault_code(const std::string& s) {
    if (s == "000") return FaultCode::f000;
    if (s == "00X") return FaultCode::f00X;
    if (s == "0X0") return FaultCode::f0X0;
    if (s == "X00") return FaultCode::fX00;
    if (s == "X0X") return FaultCode::fX0X;
    if (s == "0XX") return FaultCode::f0XX;
    throw std::invalid_argument("invalid fault code: " + s);
}

inline std::string to_string(FaultCode c) {
    switch (c) {
        case FaultCode::f000: return "000";
        case FaultCode::f00X: return "00X";
        case FaultCode::f0X0: return "0X0";
        case FaultCode::fX00: return "X00";
        case FaultCode::fX0X: return "X0X";
        case FaultCode::f0XX: return "0XX";
    }
    return "?";
}

/// Streams marked faulty by a code, as a subset of {'x','y','z'}.
inline std::vector<char> faulty_streams(FaultCode c) {
    switch (c) {
        case FaultCode::f000: return {};
        case FaultCode::f00X: return {'x'};
        case FaultCode::f0X0: return {'y'};
        case FaultCode::fX00: return {'z'};
        case FaultCode::fX0X: return {'x', 'z'};
        case FaultCode::f0XX: return {'x', 'y'};
    }
    return {};
}

/**
 * One slide-equivalent wiring of the three-stream fusion network.
 * z_first selects between (x >t z) >s (y >t z) and (x >s y) >t z; the
 * protected pair names the streams feeding the intermediate inside the
 * shielded sub-network N_L.
 */
struct MachineConfiguration {
    std::string id;
    bool z_first = true;
    std::array<char, 2> protected_inputs{'x', 'z'};
};

inline std::vector<MachineConfiguration> default_configurations() {
    return {
        MachineConfiguration{"left", true, {'x', 'z'}},
        MachineConfiguration{"right", false, {'x', 'y'}},
        MachineConfiguration{"left-alt", true, {'y', 'z'}},
    };
}

struct FaultSimStep {
    int t = 0;
    FaultCode code = FaultCode::f000;
    std::string config;
    int faulty_upstream = 0;  // faulty streams feeding the protected intermediate
    bool clean = false;
    GaussianEstimator protected_intermediate;
    GaussianEstimator fused;
};

/**
 * Per time step, choose the wiring whose protected sub-network sees no
 * faulty upstream stream when one exists; for the double faults that
 * contaminate every wiring, minimize the faulty upstream count (first
 * catalog entry wins ties). Fusion weights: t against stream z, s for
 * the final pairing. Slide-equivalence makes the fused output agree
 * across wirings when nothing is faulty.
 */
inline std::vector<FaultSimStep> fault_schedule_sim(
    const std::vector<GaussianEstimator>& xs, const std::vector<GaussianEstimator>& ys,
    const std::vector<GaussianEstimator>& zs, const std::vector<FaultCode>& faults,
    double weight_s, double weight_t,
    const std::vector<MachineConfiguration>& catalog = default_configurations()) {
    if (xs.size() != ys.size() || ys.size() != zs.size() || xs.size() != faults.size())
        throw std::invalid_argument("fault_schedule_sim: stream/fault lengths differ");
    if (catalog.empty())
        throw std::invalid_argument("fault_schedule_sim: empty configuration catalog");
    require_weight(weight_s, "fault_schedule_sim(s)");
    require_weight(weight_t, "fault_schedule_sim(t)");

    std::vector<FaultSimStep> out;
    out.reserve(xs.size());
    for (std::size_t k = 0; k < xs.size(); ++k) {
        FaultSimStep step;
        step.t = static_cast<int>(k);
        step.code = faults[k];
        const std::vector<char> bad = faulty_streams(step.code);
        auto upstream_faults = [&](const MachineConfiguration& cfg) {
            int n = 0;
            for (char s : bad)
                if (s == cfg.protected_inputs[0] || s == cfg.protected_inputs[1]) ++n;
            return n;
        };
        std::size_t best = 0;
        int best_faults = upstream_faults(catalog[0]);
        for (std::size_t i = 1; i < catalog.size(); ++i) {
            const int f = upstream_faults(catalog[i]);
            if (f < best_faults) {
                best = i;
                best_faults = f;
            }
        }
        const MachineConfiguration& cfg = catalog[best];
        step.config = cfg.id;
        step.faulty_upstream = best_faults;
        step.clean = best_faults == 0;

        const GaussianEstimator& x = xs[k];
        const GaussianEstimator& y = ys[k];
        const GaussianEstimator& z = zs[k];
        if (cfg.z_first) {
            const GaussianEstimator xz = ci_fuse(x, z, weight_t);
            const GaussianEstimator yz = ci_fuse(y, z, weight_t);
            step.protected_intermediate =
                (cfg.protected_inputs[0] == 'y' || cfg.protected_inputs[1] == 'y') ? yz : xz;
            step.fused = ci_fuse(xz, yz, weight_s);
        } else {
            const GaussianEstimator xy = ci_fuse(x, y, weight_s);
            step.protected_intermediate = xy;
            step.fused = ci_fuse(xy, z, weight_t);
        }
        out.push_back(step);
    }
    return out;
}

} // namespace tangleforge
