#pragma once

#include "tangleforge/machine.hpp"

#include "json.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace tangleforge {

enum class MoveKind { r1_insert, r1_delete, r2_insert, r2_delete, r3_slide };

inline std::string move_name(MoveKind k) {
    switch (k) {
        case MoveKind::r1_insert: return "r1-insert";
        case MoveKind::r1_delete: return "r1-delete";
        case MoveKind::r2_insert: return "r2-insert";
        case MoveKind::r2_delete: return "r2-delete";
        case MoveKind::r3_slide: return "r3-slide";
    }
    return "?";
}

inline MoveKind move_from_name(const std::string& s) {
    if (s == "r1-insert") return MoveKind::r1_insert;
    if (s == "r1-delete") return MoveKind::r1_delete;
    if (s == "r2-insert") return MoveKind::r2_insert;
    if (s == "r2-delete") return MoveKind::r2_delete;
    if (s == "r3-slide") return MoveKind::r3_slide;
    throw std::invalid_argument("unknown move kind '" + s + "'");
}

/**
 * Where to apply a move.
 *   r1-insert  arcs={r}                kink the strand r (agent = upstream piece)
 *   r1-delete  interactions={k}        remove the kink k, merging its pair
 *   r2-insert  arcs={p, g}             push strand p under agent g and back
 *   r2-delete  interactions={i1, i2}   cancel a forward/reverse stack
 *   r3-slide   interactions={iA, iB}   slide iA's fusion across iB's agent
 *              direction "left" = toward the z-first wiring's source form
 * Inserts over weighted quandles take the new interaction weight (0.5 if
 * unset).
 */
struct RewriteSite {
    MoveKind kind = MoveKind::r1_insert;
    std::vector<std::string> interactions;
    std::vector<std::string> arcs;
    std::string direction;
    std::optional<double> weight;
};

inline nlohmann::ordered_json site_to_json(const RewriteSite& s) {
    nlohmann::ordered_json j;
    j["move"] = move_name(s.kind);
    if (!s.interactions.empty()) j["interactions"] = s.interactions;
    if (!s.arcs.empty()) j["arcs"] = s.arcs;
    if (!s.direction.empty()) j["direction"] = s.direction;
    if (s.weight) j["weight"] = *s.weight;
    return j;
}

inline RewriteSite site_from_json(const nlohmann::json& j) {
    RewriteSite s;
    if (!j.contains("move")) throw std::invalid_argument("site record needs a \"move\" key");
    s.kind = move_from_name(j.at("move").get<std::string>());
    if (j.contains("interactions")) s.interactions = j.at("interactions").get<std::vector<std::string>>();
    if (j.contains("arcs")) s.arcs = j.at("arcs").get<std::vector<std::string>>();
    if (j.contains("direction")) s.direction = j.at("direction").get<std::string>();
    if (j.contains("weight")) s.weight = j.at("weight").get<double>();
    return s;
}

namespace detail {

inline std::string fresh_arc(const TangleMachine& m, const std::string& base) {
    if (!m.has_arc(base)) return base;
    for (int k = 2;; ++k) {
        const std::string c = base + "_" + std::to_string(k);
        if (!m.has_arc(c)) return c;
    }
}

inline std::string fresh_iid(const TangleMachine& m, const std::string& base) {
    if (!m.find_interaction(base)) return base;
    for (int k = 2;; ++k) {
        const std::string c = base + "_" + std::to_string(k);
        if (!m.find_interaction(c)) return c;
    }
}

inline bool same_weight(const std::optional<double>& a, const std::optional<double>& b) {
    return a.has_value() == b.has_value() && (!a || *a == *b);
}

inline void rewire_consumer(TangleMachine& m, const std::string& from, const std::string& to) {
    for (Interaction& i : m.interactions)
        for (auto& p : i.pairs)
            if (p.first == from) p.first = to;
    for (std::string& a : m.outputs)
        if (a == from) a = to;
}

inline void substitute_arc(TangleMachine& m, const std::string& from, const std::string& to) {
    for (Interaction& i : m.interactions) {
        if (i.agent == from) i.agent = to;
        for (auto& p : i.pairs) {
            if (p.first == from) p.first = to;
            if (p.second == from) p.second = to;
        }
    }
    auto fix = [&](std::vector<std::string>& regs) {
        for (std::string& a : regs)
            if (a == from) a = to;
        std::vector<std::string> dedup;
        for (const std::string& a : regs)
            if (std::find(dedup.begin(), dedup.end(), a) == dedup.end()) dedup.push_back(a);
        regs = dedup;
    };
    fix(m.inputs);
    fix(m.outputs);
    std::erase(m.arcs, from);
}

inline bool arc_in_registers(const TangleMachine& m, const std::string& a) {
    return std::find(m.inputs.begin(), m.inputs.end(), a) != m.inputs.end() ||
           std::find(m.outputs.begin(), m.outputs.end(), a) != m.outputs.end();
}

struct R3Match {
    std::size_t ia = 0, ib = 0;   // interaction indices
    std::string x, u, v, y, w, z;
    std::optional<double> s, t;   // s pairs with agent y / w, t with agent z
    std::optional<int> frame_s, frame_t;
};

/// Pattern for sliding: two chained single-pair forward interactions plus
/// a witness pair (y, w) under the same agent/weight as the z-fusion.
inline std::optional<R3Match> match_r3(const TangleMachine& m, const std::string& idA,
                                       const std::string& idB, const std::string& direction) {
    std::size_t ia = m.interactions.size(), ib = m.interactions.size();
    for (std::size_t i = 0; i < m.interactions.size(); ++i) {
        if (m.interactions[i].id == idA) ia = i;
        if (m.interactions[i].id == idB) ib = i;
    }
    if (ia >= m.interactions.size() || ib >= m.interactions.size() || ia == ib) return {};
    const Interaction& A = m.interactions[ia];
    const Interaction& B = m.interactions[ib];
    if (A.pairs.size() != 1 || B.pairs.size() != 1) return {};
    if (A.reverse || B.reverse || A.is_kink() || B.is_kink()) return {};
    if (A.pairs[0].second != B.pairs[0].first) return {};
    const std::string u = A.pairs[0].second;
    if (m.is_agent_somewhere(u) || arc_in_registers(m, u)) return {};  // u is site-internal

    R3Match r;
    r.ia = ia;
    r.ib = ib;
    r.x = A.pairs[0].first;
    r.u = u;
    r.v = B.pairs[0].second;
    if (direction == "left") {
        // A fuses with y (weight s) before B fuses with z (weight t)
        r.y = A.agent;
        r.z = B.agent;
        r.s = A.weight;
        r.t = B.weight;
        r.frame_s = A.frame;
        r.frame_t = B.frame;
        for (std::size_t c = 0; c < m.interactions.size(); ++c) {
            if (c == ia || c == ib) continue;
            const Interaction& C = m.interactions[c];
            if (C.agent != r.z || C.reverse || !same_weight(C.weight, r.t)) continue;
            for (const auto& p : C.pairs)
                if (p.first == r.y) {
                    r.w = p.second;
                    return r;
                }
        }
        return {};
    }
    if (direction == "right") {
        // A fuses with z (weight t) before B fuses with w = y > z (weight s)
        r.z = A.agent;
        r.w = B.agent;
        r.t = A.weight;
        r.s = B.weight;
        r.frame_t = A.frame;
        r.frame_s = B.frame;
        for (std::size_t c = 0; c < m.interactions.size(); ++c) {
            if (c == ia || c == ib) continue;
            const Interaction& C = m.interactions[c];
            if (C.agent != r.z || C.reverse || !same_weight(C.weight, r.t)) continue;
            for (const auto& p : C.pairs)
                if (p.second == r.w) {
                    r.y = p.first;
                    return r;
                }
        }
        return {};
    }
    return {};
}

struct R2Match {
    std::size_t i1 = 0, i2 = 0;
    std::string p, q, r;
};

inline std::optional<R2Match> match_r2_delete(const TangleMachine& m, const std::string& id1,
                                              const std::string& id2) {
    std::size_t i1 = m.interactions.size(), i2 = m.interactions.size();
    for (std::size_t i = 0; i < m.interactions.size(); ++i) {
        if (m.interactions[i].id == id1) i1 = i;
        if (m.interactions[i].id == id2) i2 = i;
    }
    if (i1 >= m.interactions.size() || i2 >= m.interactions.size() || i1 == i2) return {};
    const Interaction& a = m.interactions[i1];
    const Interaction& b = m.interactions[i2];
    if (a.pairs.size() != 1 || b.pairs.size() != 1) return {};
    if (a.agent != b.agent || a.reverse == b.reverse || !same_weight(a.weight, b.weight))
        return {};
    if (a.pairs[0].second != b.pairs[0].first) return {};
    R2Match r;
    r.i1 = i1;
    r.i2 = i2;
    r.p = a.pairs[0].first;
    r.q = a.pairs[0].second;
    r.r = b.pairs[0].second;
    if (m.is_agent_somewhere(r.q) || arc_in_registers(m, r.q)) return {};
    if (r.p == r.q || r.q == r.r) return {};
    return r;
}

} // namespace detail

/**
 * Applies one local move. Every move preserves the colouring count over
 * any quandle, and a valid colouring of the source induces one of the
 * target agreeing outside the site.
 */
inline TangleMachine apply_move(const TangleMachine& m, const RewriteSite& site) {
    auto fail = [&](const std::string& why) -> TangleMachine {
        throw std::invalid_argument("apply_move(" + move_name(site.kind) + "): " + why);
    };
    TangleMachine out = m;
    switch (site.kind) {
        case MoveKind::r1_insert: {
            if (site.arcs.size() != 1) return fail("needs one target arc");
            const std::string r = site.arcs[0];
            if (!m.has_arc(r)) return fail("no arc '" + r + "'");
            std::optional<double> w;
            if (m.quandle.weighted()) {
                w = site.weight.value_or(0.5);
                if (!(*w > 0.0 && *w < 1.0)) return fail("weight outside (0,1)");
            }
            const std::string r2 = detail::fresh_arc(m, r + "_k");
            const std::string iid = detail::fresh_iid(m, "k_" + r);
            detail::rewire_consumer(out, r, r2);
            out.arcs.push_back(r2);
            Interaction kink;
            kink.id = iid;
            kink.agent = r;
            kink.pairs = {{r, r2}};
            kink.weight = w;
            out.interactions.push_back(std::move(kink));
            return out;
        }
        case MoveKind::r1_delete: {
            if (site.interactions.size() != 1) return fail("needs one interaction id");
            const Interaction* k = m.find_interaction(site.interactions[0]);
            if (!k) return fail("no interaction '" + site.interactions[0] + "'");
            if (!k->is_kink()) return fail("'" + k->id + "' is not a kink");
            const std::string p = k->pairs[0].first;
            const std::string q = k->pairs[0].second;
            std::erase_if(out.interactions, [&](const Interaction& i) { return i.id == k->id; });
            detail::substitute_arc(out, q, p);
            return out;
        }
        case MoveKind::r2_insert: {
            if (site.arcs.size() != 2) return fail("needs strand and agent arcs");
            const std::string p = site.arcs[0];
            const std::string g = site.arcs[1];
            if (!m.has_arc(p) || !m.has_arc(g)) return fail("unknown arc");
            if (p == g) return fail("strand and agent must differ");
            std::optional<double> w;
            if (m.quandle.weighted()) {
                w = site.weight.value_or(0.5);
                if (!(*w > 0.0 && *w < 1.0)) return fail("weight outside (0,1)");
            }
            const std::string q = detail::fresh_arc(out, p + "_u");
            out.arcs.push_back(q);
            const std::string r = detail::fresh_arc(out, p + "_b");
            out.arcs.push_back(r);
            detail::rewire_consumer(out, p, r);
            Interaction i1, i2;
            i1.id = detail::fresh_iid(out, "r2a_" + p);
            i1.agent = g;
            i1.pairs = {{p, q}};
            i1.weight = w;
            out.interactions.push_back(i1);
            i2.id = detail::fresh_iid(out, "r2b_" + p);
            i2.agent = g;
            i2.pairs = {{q, r}};
            i2.weight = w;
            i2.reverse = true;
            out.interactions.push_back(i2);
            return out;
        }
        case MoveKind::r2_delete: {
            if (site.interactions.size() != 2) return fail("needs two interaction ids");
            const auto match = detail::match_r2_delete(m, site.interactions[0], site.interactions[1]);
            if (!match) return fail("interactions do not form a forward/reverse stack");
            std::erase_if(out.interactions, [&](const Interaction& i) {
                return i.id == site.interactions[0] || i.id == site.interactions[1];
            });
            detail::substitute_arc(out, match->q, match->p);  // q dangles; fold it away
            detail::substitute_arc(out, match->r, match->p);
            return out;
        }
        case MoveKind::r3_slide: {
            if (site.interactions.size() != 2) return fail("needs two interaction ids");
            if (site.direction != "left" && site.direction != "right")
                return fail("direction must be left or right");
            const auto match =
                detail::match_r3(m, site.interactions[0], site.interactions[1], site.direction);
            if (!match) return fail("interactions do not match the slide pattern");
            Interaction& A = out.interactions[match->ia];
            Interaction& B = out.interactions[match->ib];
            if (site.direction == "left") {
                A.agent = match->z;
                A.weight = match->t;
                A.frame = match->frame_t;
                B.agent = match->w;
                B.weight = match->s;
                B.frame = match->frame_s;
            } else {
                A.agent = match->y;
                A.weight = match->s;
                A.frame = match->frame_s;
                B.agent = match->z;
                B.weight = match->t;
                B.frame = match->frame_t;
            }
            return out;
        }
    }
    return fail("unreachable");
}

/**
 * All applicable delete/slide sites, plus insert sites when requested.
 * Insert weights over weighted quandles are drawn from the weights
 * already present (plus extra_weights), defaulting to 0.5.
 */
inline std::vector<RewriteSite> find_sites(const TangleMachine& m, bool include_inserts = false,
                                           const std::vector<double>& extra_weights = {}) {
    std::vector<RewriteSite> sites;
    for (const Interaction& i : m.interactions)
        if (i.is_kink()) sites.push_back({MoveKind::r1_delete, {i.id}, {}, "", {}});
    for (const Interaction& a : m.interactions)
        for (const Interaction& b : m.interactions) {
            if (a.id == b.id) continue;
            if (detail::match_r2_delete(m, a.id, b.id))
                sites.push_back({MoveKind::r2_delete, {a.id, b.id}, {}, "", {}});
            for (const char* dir : {"left", "right"})
                if (detail::match_r3(m, a.id, b.id, dir))
                    sites.push_back({MoveKind::r3_slide, {a.id, b.id}, {}, dir, {}});
        }
    if (include_inserts) {
        std::vector<std::optional<double>> weights;
        if (m.quandle.weighted()) {
            std::set<double> pool(extra_weights.begin(), extra_weights.end());
            for (const Interaction& i : m.interactions)
                if (i.weight) pool.insert(*i.weight);
            if (pool.empty()) pool.insert(0.5);
            for (double w : pool) weights.emplace_back(w);
        } else {
            weights.emplace_back(std::nullopt);
        }
        for (const std::string& r : m.arcs)
            for (const auto& w : weights)
                sites.push_back({MoveKind::r1_insert, {}, {r}, "", w});
        for (const std::string& p : m.arcs)
            for (const std::string& g : m.arcs) {
                if (p == g) continue;
                for (const auto& w : weights)
                    sites.push_back({MoveKind::r2_insert, {}, {p, g}, "", w});
            }
    }
    return sites;
}

/**
 * Relabeling-invariant key. Reverse interactions are first folded into
 * forward equations (a reverse pair is the same constraint read the
 * other way), then arcs are partitioned by iterated structural
 * refinement and the lexicographically smallest serialization over all
 * class-preserving labelings is taken. Exact, with a guard against
 * pathologically symmetric machines.
 */
inline std::string canonical_key(const TangleMachine& m) {
    struct Rec {
        std::string agent;
        std::string w;
        int frame;
        std::vector<std::pair<std::string, std::string>> pairs;
    };
    std::vector<Rec> recs;
    for (const Interaction& i : m.interactions) {
        Rec r;
        r.agent = i.agent;
        r.w = i.weight ? format_double(*i.weight) : "-";
        r.frame = i.frame.value_or(-1);
        for (const auto& p : i.pairs)
            r.pairs.push_back(i.reverse ? std::make_pair(p.second, p.first) : p);
        recs.push_back(std::move(r));
    }

    std::set<std::string> used(m.inputs.begin(), m.inputs.end());
    used.insert(m.outputs.begin(), m.outputs.end());
    for (const Rec& r : recs) {
        used.insert(r.agent);
        for (const auto& p : r.pairs) {
            used.insert(p.first);
            used.insert(p.second);
        }
    }
    std::vector<std::string> active;
    for (const std::string& a : m.arcs)
        if (used.count(a)) active.push_back(a);

    const std::set<std::string> in_reg(m.inputs.begin(), m.inputs.end());
    const std::set<std::string> out_reg(m.outputs.begin(), m.outputs.end());
    std::map<std::string, int> color;
    auto rank_signatures = [&](const std::map<std::string, std::string>& sig) {
        std::set<std::string> uniq;
        for (const auto& [a, s] : sig) uniq.insert(s);
        std::map<std::string, int> rank;
        int k = 0;
        for (const std::string& s : uniq) rank[s] = k++;
        for (const std::string& a : active) color[a] = rank.at(sig.at(a));
        return uniq.size();
    };
    std::map<std::string, std::string> sig;
    for (const std::string& a : active) {
        int agent_n = 0, in_n = 0, out_n = 0;
        for (const Rec& r : recs) {
            if (r.agent == a) ++agent_n;
            for (const auto& p : r.pairs) {
                if (p.first == a) ++in_n;
                if (p.second == a) ++out_n;
            }
        }
        sig[a] = std::to_string(agent_n) + "," + std::to_string(in_n) + "," +
                 std::to_string(out_n) + "," + std::to_string(in_reg.count(a)) + "," +
                 std::to_string(out_reg.count(a));
    }
    std::size_t classes = rank_signatures(sig);
    for (std::size_t round = 0; round < active.size(); ++round) {
        std::map<std::string, std::string> next;
        for (const std::string& a : active) {
            std::vector<std::string> tokens;
            for (const Rec& r : recs) {
                std::vector<std::string> paircols;
                for (const auto& p : r.pairs)
                    paircols.push_back("(" + std::to_string(color[p.first]) + ">" +
                                       std::to_string(color[p.second]) + ")");
                std::sort(paircols.begin(), paircols.end());
                std::string shape = "w" + r.w + "f" + std::to_string(r.frame) + "g" +
                                    std::to_string(color[r.agent]);
                for (const std::string& pc : paircols) shape += pc;
                if (r.agent == a) tokens.push_back("G:" + shape);
                for (const auto& p : r.pairs) {
                    if (p.first == a)
                        tokens.push_back("I:" + std::to_string(color[p.second]) + ":" + shape);
                    if (p.second == a)
                        tokens.push_back("O:" + std::to_string(color[p.first]) + ":" + shape);
                }
            }
            std::sort(tokens.begin(), tokens.end());
            std::string s = std::to_string(color[a]);
            for (const std::string& t : tokens) s += "|" + t;
            next[a] = s;
        }
        const std::size_t new_classes = rank_signatures(next);
        if (new_classes == classes) break;
        classes = new_classes;
    }

    // group by colour class (class order is label-invariant by construction)
    std::map<int, std::vector<std::string>> cells;
    for (const std::string& a : active) cells[color[a]].push_back(a);
    long long labelings = 1;
    for (auto& [c, cell] : cells) {
        std::sort(cell.begin(), cell.end());
        for (std::size_t i = 2; i <= cell.size(); ++i) labelings *= static_cast<long long>(i);
        if (labelings > 1000000)
            throw std::runtime_error("canonical_key: machine too symmetric to canonicalize");
    }

    auto serialize = [&](const std::map<std::string, int>& label) {
        std::vector<std::string> parts;
        for (const Rec& r : recs) {
            std::vector<std::string> ps;
            for (const auto& p : r.pairs)
                ps.push_back("(" + std::to_string(label.at(p.first)) + "," +
                             std::to_string(label.at(p.second)) + ")");
            std::sort(ps.begin(), ps.end());
            std::string s = "g" + std::to_string(label.at(r.agent)) + "w" + r.w + "f" +
                            std::to_string(r.frame) + "p";
            for (const std::string& x : ps) s += x;
            parts.push_back(std::move(s));
        }
        std::sort(parts.begin(), parts.end());
        auto regs = [&](const std::vector<std::string>& v) {
            std::vector<int> ids;
            for (const std::string& a : v) ids.push_back(label.at(a));
            std::sort(ids.begin(), ids.end());
            std::string s;
            for (int i : ids) s += std::to_string(i) + ",";
            return s;
        };
        std::string out = "q:" + m.quandle.spec_string() + "|n:" + std::to_string(m.arcs.size()) +
                          "|in:" + regs(m.inputs) + "|out:" + regs(m.outputs) + "|";
        for (const std::string& p : parts) out += p + ";";
        return out;
    };

    std::string best;
    std::map<std::string, int> label;
    std::vector<std::vector<std::string>> cell_list;
    for (auto& [c, cell] : cells) cell_list.push_back(cell);
    auto assign = [&](auto&& self, std::size_t cell_idx, int next_label) -> void {
        if (cell_idx == cell_list.size()) {
            const std::string s = serialize(label);
            if (best.empty() || s < best) best = s;
            return;
        }
        std::vector<std::string>& cell = cell_list[cell_idx];
        std::sort(cell.begin(), cell.end());
        do {
            for (std::size_t i = 0; i < cell.size(); ++i) label[cell[i]] = next_label + static_cast<int>(i);
            self(self, cell_idx + 1, next_label + static_cast<int>(cell.size()));
        } while (std::next_permutation(cell.begin(), cell.end()));
    };
    assign(assign, 0, 0);
    return best;
}

struct Equivalence {
    enum class Verdict { equivalent, distinguished, unknown };
    Verdict verdict = Verdict::unknown;
    std::vector<RewriteSite> moves;
    std::string witness;
};

/**
 * Bounded breadth-first search for a move sequence from m1 to m2, after
 * a cheap invariant screen (colouring counts over dihedral 3 and 5).
 * "unknown" is an honest outcome once depth or the node budget runs out.
 */
inline Equivalence equivalent(const TangleMachine& m1, const TangleMachine& m2, int depth = 6,
                              std::size_t node_cap = 100000) {
    if (!(m1.quandle == m2.quandle))
        throw std::invalid_argument("equivalent: machines bound to different quandles");
    Equivalence res;
    const std::string target = canonical_key(m2);
    if (canonical_key(m1) == target) {
        res.verdict = Equivalence::Verdict::equivalent;
        return res;
    }
    for (int k : {3, 5}) {
        const long long c1 = enumerate_colorings(m1, QuandleInstance::dihedral(k)).count;
        const long long c2 = enumerate_colorings(m2, QuandleInstance::dihedral(k)).count;
        if (c1 != c2) {
            res.verdict = Equivalence::Verdict::distinguished;
            res.witness = "dihedral(" + std::to_string(k) + ") counts " + std::to_string(c1) +
                          " vs " + std::to_string(c2);
            return res;
        }
    }
    std::vector<double> pool;
    for (const TangleMachine* m : {&m1, &m2})
        for (const Interaction& i : m->interactions)
            if (i.weight) pool.push_back(*i.weight);

    struct Node {
        TangleMachine m;
        std::vector<RewriteSite> path;
    };
    std::deque<Node> frontier;
    frontier.push_back({m1, {}});
    std::set<std::string> seen{canonical_key(m1)};
    for (int level = 0; level < depth && !frontier.empty(); ++level) {
        std::deque<Node> next;
        for (Node& node : frontier) {
            for (const RewriteSite& site : find_sites(node.m, true, pool)) {
                TangleMachine moved = apply_move(node.m, site);
                const std::string key = canonical_key(moved);
                if (key == target) {
                    res.verdict = Equivalence::Verdict::equivalent;
                    res.moves = node.path;
                    res.moves.push_back(site);
                    return res;
                }
                if (seen.size() >= node_cap) continue;
                if (seen.insert(key).second) {
                    Node n{std::move(moved), node.path};
                    n.path.push_back(site);
                    next.push_back(std::move(n));
                }
            }
        }
        frontier = std::move(next);
    }
    res.verdict = Equivalence::Verdict::unknown;
    return res;
}

} // namespace tangleforge
