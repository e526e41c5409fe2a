#pragma once

#include "tangleforge/machine.hpp"

#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace tangleforge {

/**
 * Counts valid colourings of m by the order-k dihedral quandle. With
 * confusable_only, keeps only assignments in which at least one colour
 * is uniquely determined by all the others.
 */
inline long long cap_k(const TangleMachine& m, int k, bool confusable_only = false,
                       const EnumerationCaps& caps = EnumerationCaps::from_env()) {
    if (k < 2 || k > 16) throw std::invalid_argument("cap_k: k must lie in [2,16]");
    EnumerationResult res = enumerate_colorings(m, QuandleInstance::dihedral(k), caps);
    if (!confusable_only) return res.count;
    if (!res.listed)
        throw std::invalid_argument("cap_k: too many colourings to filter confusable ones");
    // group colourings by their restriction away from each arc; a colouring
    // is confusable when some arc's colour is pinned by all the others,
    // i.e. its restriction group is a singleton
    std::vector<bool> confusable(res.colorings.size(), false);
    for (const std::string& arc : m.arcs) {
        std::map<std::string, std::vector<std::size_t>> groups;
        for (std::size_t i = 0; i < res.colorings.size(); ++i) {
            std::string key;
            for (const auto& [b, e] : res.colorings[i])
                if (b != arc) key += std::to_string(std::get<long>(e)) + ",";
            groups[key].push_back(i);
        }
        for (const auto& [key, members] : groups)
            if (members.size() == 1) confusable[members[0]] = true;
    }
    long long total = 0;
    for (bool b : confusable) total += b ? 1 : 0;
    return total;
}

struct CapacityReport {
    int kmax = 0;
    std::map<int, long long> cap;  // k -> Cap_k
    double capacity = 1.0;         // max over k of Cap_k^(1/k); lower bound for the sup
    int argmax_k = 0;
    bool confusable_only = false;
};

inline CapacityReport capacity(const TangleMachine& m, int kmax, bool confusable_only = false,
                               const EnumerationCaps& caps = EnumerationCaps::from_env()) {
    if (kmax < 2 || kmax > 16) throw std::invalid_argument("capacity: kmax must lie in [2,16]");
    CapacityReport rep;
    rep.kmax = kmax;
    rep.confusable_only = confusable_only;
    for (int k = 2; k <= kmax; ++k) {
        const long long n = cap_k(m, k, confusable_only, caps);
        rep.cap[k] = n;
        const double root = n > 0 ? std::pow(static_cast<double>(n), 1.0 / k) : 0.0;
        if (root > rep.capacity) {
            rep.capacity = root;
            rep.argmax_k = k;
        }
    }
    return rep;
}

namespace detail {

inline std::set<std::string> block_arcs(const TangleMachine& m, const std::vector<int>& members) {
    std::set<std::string> arcs;
    for (int idx : members) {
        const Interaction& i = m.interactions[static_cast<std::size_t>(idx)];
        arcs.insert(i.agent);
        for (const auto& p : i.pairs) {
            arcs.insert(p.first);
            arcs.insert(p.second);
        }
    }
    return arcs;
}

/// All arcs shared between the two blocks must carry one single colour.
inline bool boundary_monochrome(const TangleMachine& m, const Coloring& c,
                                const std::vector<int>& b1, const std::vector<int>& b2) {
    const std::set<std::string> a1 = block_arcs(m, b1);
    const std::set<std::string> a2 = block_arcs(m, b2);
    const Element* first = nullptr;
    for (const std::string& a : a1) {
        if (!a2.count(a)) continue;
        if (!first)
            first = &c.at(a);
        else if (!elements_equal(m.quandle, *first, c.at(a)))
            return false;
    }
    return true;
}

inline bool partition_valid(const TangleMachine& m, const Coloring& c,
                            const std::vector<std::vector<int>>& blocks) {
    for (std::size_t i = 0; i < blocks.size(); ++i)
        for (std::size_t j = i + 1; j < blocks.size(); ++j)
            if (!boundary_monochrome(m, c, blocks[i], blocks[j])) return false;
    return true;
}

} // namespace detail

/**
 * Maximal number of connect-summands of the coloured machine: the
 * largest decomposition of the interaction set into blocks whose
 * pairwise shared arcs are monochromatic. Exhaustive partition search
 * up to 10 interactions, forced-merge fixpoint above (merging a
 * conflicting block pair is always forced, so the fixpoint is the
 * finest valid partition).
 */
inline int complexity(const TangleMachine& m, const Coloring& c) {
    if (!check_coloring(m, c)) throw std::invalid_argument("complexity: invalid colouring");
    const int n = static_cast<int>(m.interactions.size());
    if (n == 0) return 0;
    if (n <= 10) {
        // enumerate set partitions via restricted growth strings
        std::vector<int> rgs(static_cast<std::size_t>(n), 0);
        int best = 1;
        auto rec = [&](auto&& self, int pos, int max_block) -> void {
            if (pos == n) {
                std::vector<std::vector<int>> blocks(static_cast<std::size_t>(max_block + 1));
                for (int i = 0; i < n; ++i)
                    blocks[static_cast<std::size_t>(rgs[static_cast<std::size_t>(i)])].push_back(i);
                if (static_cast<int>(blocks.size()) > best && detail::partition_valid(m, c, blocks))
                    best = static_cast<int>(blocks.size());
                return;
            }
            for (int b = 0; b <= max_block + 1; ++b) {
                rgs[static_cast<std::size_t>(pos)] = b;
                self(self, pos + 1, std::max(max_block, b));
            }
        };
        rec(rec, 1, 0);
        return best;
    }
    // forced-merge fixpoint
    std::vector<std::vector<int>> blocks;
    for (int i = 0; i < n; ++i) blocks.push_back({i});
    bool merged = true;
    while (merged) {
        merged = false;
        for (std::size_t i = 0; i < blocks.size() && !merged; ++i)
            for (std::size_t j = i + 1; j < blocks.size() && !merged; ++j)
                if (!detail::boundary_monochrome(m, c, blocks[i], blocks[j])) {
                    blocks[i].insert(blocks[i].end(), blocks[j].begin(), blocks[j].end());
                    blocks.erase(blocks.begin() + static_cast<std::ptrdiff_t>(j));
                    merged = true;
                }
    }
    return static_cast<int>(blocks.size());
}

} // namespace tangleforge
