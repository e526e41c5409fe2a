#pragma once

#include "tangleforge/quandle.hpp"

#include <algorithm>
#include <cstdlib>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace tangleforge {

/**
 * One interaction: an agent arc acting on ordered (input, output) patient
 * pairs with a common weight. A reverse orientation means the patient
 * equation reads through the inverse operation. The agent normally stays
 * disjoint from the patients; the one sanctioned exception is the
 * single-pair kink whose agent coincides with one side of its pair,
 * which is the local pattern the R1 move creates and removes.
 */
struct Interaction {
    std::string id;
    std::string agent;
    std::vector<std::pair<std::string, std::string>> pairs;
    std::optional<double> weight;
    std::optional<int> frame;
    bool reverse = false;

    bool is_kink() const {
        return pairs.size() == 1 && (agent == pairs[0].first || agent == pairs[0].second);
    }
};

/**
 * A tangle machine: registers (arcs) wired together by interactions,
 * with optional designated input/output registers. Machines are plain
 * values; operations below never mutate their arguments.
 */
struct TangleMachine {
    std::string name = "machine";
    QuandleInstance quandle = QuandleInstance::dihedral(3);
    std::vector<std::string> arcs;
    std::vector<Interaction> interactions;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;

    bool has_arc(const std::string& a) const {
        return std::find(arcs.begin(), arcs.end(), a) != arcs.end();
    }

    const Interaction* find_interaction(const std::string& id) const {
        for (const Interaction& i : interactions)
            if (i.id == id) return &i;
        return nullptr;
    }

    int input_patient_count(const std::string& a) const {
        int n = 0;
        for (const Interaction& i : interactions)
            for (const auto& p : i.pairs)
                if (p.first == a) ++n;
        return n;
    }

    int output_patient_count(const std::string& a) const {
        int n = 0;
        for (const Interaction& i : interactions)
            for (const auto& p : i.pairs)
                if (p.second == a) ++n;
        return n;
    }

    bool is_agent_somewhere(const std::string& a) const {
        for (const Interaction& i : interactions)
            if (i.agent == a) return true;
        return false;
    }
};

using Coloring = std::map<std::string, Element>;

struct ValidationReport {
    std::vector<std::string> violations;
    bool ok() const { return violations.empty(); }
};

inline ValidationReport validate(const TangleMachine& m) {
    ValidationReport rep;
    auto flag = [&](const std::string& msg) { rep.violations.push_back(msg); };

    std::set<std::string> arc_set;
    for (const std::string& a : m.arcs) {
        if (a.empty()) flag("empty arc id");
        if (!arc_set.insert(a).second) flag("duplicate arc id '" + a + "'");
    }
    std::set<std::string> iid_set;
    std::map<std::string, int> in_count, out_count;
    for (const Interaction& i : m.interactions) {
        if (!iid_set.insert(i.id).second) flag("duplicate interaction id '" + i.id + "'");
        if (!arc_set.count(i.agent))
            flag("interaction '" + i.id + "' has undeclared agent arc '" + i.agent + "'");
        if (i.pairs.empty()) flag("interaction '" + i.id + "' has no patient pairs");
        for (const auto& [in, out] : i.pairs) {
            if (!arc_set.count(in))
                flag("interaction '" + i.id + "' has undeclared input arc '" + in + "'");
            if (!arc_set.count(out))
                flag("interaction '" + i.id + "' has undeclared output arc '" + out + "'");
            if (in == out)
                flag("interaction '" + i.id + "' pairs arc '" + in + "' with itself");
            ++in_count[in];
            ++out_count[out];
            if (!i.is_kink() && (i.agent == in || i.agent == out))
                flag("interaction '" + i.id + "' uses its agent '" + i.agent + "' as a patient");
        }
        if (m.quandle.weighted()) {
            if (!i.weight)
                flag("interaction '" + i.id + "' needs a weight over " +
                     kind_name(m.quandle.kind));
            else if (!(*i.weight > 0.0 && *i.weight < 1.0))
                flag("interaction '" + i.id + "' weight " + format_double(*i.weight) +
                     " outside (0,1)");
        }
        if (i.frame && *i.frame < 0) flag("interaction '" + i.id + "' has negative frame");
    }
    for (const auto& [arc, n] : in_count)
        if (n > 1) flag("arc '" + arc + "' is an input patient of " + std::to_string(n) +
                        " interactions");
    for (const auto& [arc, n] : out_count)
        if (n > 1) flag("arc '" + arc + "' is an output patient of " + std::to_string(n) +
                        " interactions");
    for (const std::string& a : m.inputs) {
        if (!arc_set.count(a)) flag("undeclared input register '" + a + "'");
        if (out_count.count(a)) flag("input register '" + a + "' is an output patient");
    }
    for (const std::string& a : m.outputs) {
        if (!arc_set.count(a)) flag("undeclared output register '" + a + "'");
        if (in_count.count(a)) flag("output register '" + a + "' is an input patient");
    }
    return rep;
}

/// Output colour of one patient pair given input and agent colours.
inline Element interaction_out(const TangleMachine& m, const Interaction& i, const Element& in,
                               const Element& agent) {
    return i.reverse ? unapply(m.quandle, in, agent, i.weight)
                     : apply(m.quandle, in, agent, i.weight);
}

/// Input colour of one patient pair given output and agent colours.
inline Element interaction_in(const TangleMachine& m, const Interaction& i, const Element& out,
                              const Element& agent) {
    return i.reverse ? apply(m.quandle, out, agent, i.weight)
                     : unapply(m.quandle, out, agent, i.weight);
}

/// True iff the total colouring satisfies every interaction equation.
inline bool check_coloring(const TangleMachine& m, const Coloring& c, double tol = 1e-9) {
    for (const std::string& a : m.arcs)
        if (!c.count(a)) throw std::invalid_argument("missing colour for arc '" + a + "'");
    for (const Interaction& i : m.interactions) {
        const Element& agent = c.at(i.agent);
        for (const auto& [in, out] : i.pairs) {
            if (!elements_equal(m.quandle, c.at(out),
                                interaction_out(m, i, c.at(in), agent), tol))
                return false;
        }
    }
    return true;
}

struct PropagationError : std::runtime_error {
    enum class Kind { underdetermined, inconsistent, cyclic };
    Kind kind;
    PropagationError(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
};

/**
 * Extends a partial colouring to the unique valid total colouring by
 * repeated sweeps: a pair output follows from its input and agent, and
 * an input from its output and agent. Agents are never solved for.
 * Fails as "inconsistent" when an arc receives conflicting values (sum
 * of roundoff measured against tol), "cyclic" when the remaining
 * unknowns feed each other, "underdetermined" when some unknown has no
 * determining interaction at all.
 */
inline Coloring propagate(const TangleMachine& m, const Coloring& partial, double tol = 1e-9) {
    Coloring c;
    for (const auto& [arc, e] : partial) {
        if (!m.has_arc(arc)) throw std::invalid_argument("unknown arc '" + arc + "'");
        require_element(m.quandle, e);
        c.emplace(arc, e);
    }
    auto set_or_check = [&](const std::string& arc, const Element& v) {
        auto it = c.find(arc);
        if (it == c.end()) {
            c.emplace(arc, v);
            return true;
        }
        if (!elements_equal(m.quandle, it->second, v, tol))
            throw PropagationError(PropagationError::Kind::inconsistent,
                                   "arc '" + arc + "' receives conflicting colours");
        return false;
    };
    bool changed = true;
    std::size_t sweeps = 0;
    while (changed && sweeps <= m.arcs.size() + 1) {
        changed = false;
        ++sweeps;
        for (const Interaction& i : m.interactions) {
            auto agent_it = c.find(i.agent);
            if (agent_it == c.end()) continue;
            for (const auto& [in, out] : i.pairs) {
                const bool have_in = c.count(in) > 0;
                const bool have_out = c.count(out) > 0;
                if (have_in)
                    changed |= set_or_check(out, interaction_out(m, i, c.at(in), agent_it->second));
                else if (have_out)
                    changed |= set_or_check(in, interaction_in(m, i, c.at(out), agent_it->second));
            }
        }
    }
    if (c.size() == m.arcs.size()) return c;

    // classify the stall: an unknown with no determining route at all means
    // underdetermined; otherwise every blocked route waits on another
    // unknown, which forces a dependency cycle
    for (const std::string& a : m.arcs) {
        if (c.count(a)) continue;
        bool has_route = false;
        for (const Interaction& i : m.interactions)
            for (const auto& [in, out] : i.pairs)
                if (in == a || out == a) has_route = true;
        if (!has_route)
            throw PropagationError(PropagationError::Kind::underdetermined,
                                   "arc '" + a + "' is not determined by any interaction");
    }
    throw PropagationError(PropagationError::Kind::cyclic,
                           "remaining unknown arcs form a dependency cycle");
}

struct EnumerationCaps {
    long long max_carrier = 16;
    int max_arcs = 24;
    long long max_list = 10000;

    /// TANGLEFORGE_MAX_ENUM raises/lowers the materialization cap.
    static EnumerationCaps from_env() {
        EnumerationCaps caps;
        if (const char* env = std::getenv("TANGLEFORGE_MAX_ENUM"))
            caps.max_list = std::atoll(env);
        return caps;
    }
};

struct EnumerationResult {
    long long count = 0;
    bool listed = false;
    std::vector<Coloring> colorings;
};

/**
 * Exact count (and, below the cap, the list) of valid total colourings
 * of m over a finite quandle, by backtracking with forced-value closure:
 * whenever an interaction already knows two of a pair's three roles the
 * third is derived instead of branched.
 */
inline EnumerationResult enumerate_colorings(const TangleMachine& m, const QuandleInstance& q,
                                             const EnumerationCaps& caps = EnumerationCaps::from_env()) {
    if (!q.finite())
        throw std::invalid_argument("enumerate_colorings needs a finite quandle");
    if (q.carrier_size() > caps.max_carrier)
        throw std::invalid_argument("carrier size " + std::to_string(q.carrier_size()) +
                                    " exceeds cap " + std::to_string(caps.max_carrier));
    if (static_cast<int>(m.arcs.size()) > caps.max_arcs)
        throw std::invalid_argument("machine has too many arcs to enumerate");

    TangleMachine mq = m;
    mq.quandle = q;  // rebind; single-operation kinds ignore stored weights
    const std::vector<Element> elems = carrier(q);

    EnumerationResult res;
    Coloring c;
    std::vector<std::string> trail;

    // Derives every colour forced by current assignments. Returns false on
    // contradiction. Newly assigned arcs are pushed on the trail.
    auto closure = [&]() -> bool {
        bool changed = true;
        while (changed) {
            changed = false;
            for (const Interaction& i : mq.interactions) {
                auto agent_it = c.find(i.agent);
                if (agent_it == c.end()) continue;
                for (const auto& [in, out] : i.pairs) {
                    const bool have_in = c.count(in) > 0;
                    const bool have_out = c.count(out) > 0;
                    if (!have_in && !have_out) continue;
                    if (have_in) {
                        Element v = interaction_out(mq, i, c.at(in), agent_it->second);
                        auto it = c.find(out);
                        if (it == c.end()) {
                            c.emplace(out, std::move(v));
                            trail.push_back(out);
                            changed = true;
                        } else if (!elements_equal(q, it->second, v)) {
                            return false;
                        }
                    } else {
                        Element v = interaction_in(mq, i, c.at(out), agent_it->second);
                        c.emplace(in, std::move(v));
                        trail.push_back(in);
                        changed = true;
                    }
                }
            }
        }
        return true;
    };

    auto dfs = [&](auto&& self) -> void {
        const std::size_t mark = trail.size();
        if (closure()) {
            std::string branch_arc;
            for (const std::string& a : mq.arcs)
                if (!c.count(a)) {
                    branch_arc = a;
                    break;
                }
            if (branch_arc.empty()) {
                ++res.count;
                if (res.count <= caps.max_list) res.colorings.push_back(c);
            } else {
                for (const Element& e : elems) {
                    c.emplace(branch_arc, e);
                    trail.push_back(branch_arc);
                    self(self);
                    c.erase(branch_arc);
                    trail.pop_back();
                }
            }
        }
        while (trail.size() > mark) {
            c.erase(trail.back());
            trail.pop_back();
        }
    };
    dfs(dfs);

    res.listed = res.count <= caps.max_list;
    if (!res.listed) res.colorings.clear();
    return res;
}

/**
 * Joins two machines by identifying arc a1 of m1 with arc a2 of m2.
 * a1 must not be consumed as an input patient in m1 and a2 must not be
 * produced as an output patient in m2 (free endpoints or pure agents),
 * which keeps patient linearity intact in the sum. All ids are
 * freshened deterministically with #1 / #2 suffixes by machine of
 * origin; the identified arc keeps m1's name.
 */
inline TangleMachine connect_sum(const TangleMachine& m1, const std::string& a1,
                                 const TangleMachine& m2, const std::string& a2) {
    if (!m1.has_arc(a1)) throw std::invalid_argument("connect_sum: no arc '" + a1 + "' in m1");
    if (!m2.has_arc(a2)) throw std::invalid_argument("connect_sum: no arc '" + a2 + "' in m2");
    if (!(m1.quandle == m2.quandle))
        throw std::invalid_argument("connect_sum: machines bound to different quandles");
    if (m1.input_patient_count(a1) > 0)
        throw std::invalid_argument("connect_sum: arc '" + a1 +
                                    "' is consumed mid-machine in m1");
    if (m2.output_patient_count(a2) > 0)
        throw std::invalid_argument("connect_sum: arc '" + a2 +
                                    "' is produced mid-machine in m2");

    const std::string merged = a1 + "#1";
    auto rename = [&](const TangleMachine& m, const std::string& suffix,
                      const std::string& identify) {
        TangleMachine r = m;
        auto map_arc = [&](const std::string& a) {
            return a == identify ? merged : a + suffix;
        };
        for (std::string& a : r.arcs) a = map_arc(a);
        for (Interaction& i : r.interactions) {
            i.id += suffix;
            i.agent = map_arc(i.agent);
            for (auto& p : i.pairs) {
                p.first = map_arc(p.first);
                p.second = map_arc(p.second);
            }
        }
        for (std::string& a : r.inputs) a = map_arc(a);
        for (std::string& a : r.outputs) a = map_arc(a);
        return r;
    };
    TangleMachine r1 = rename(m1, "#1", a1);
    TangleMachine r2 = rename(m2, "#2", a2);

    TangleMachine sum;
    sum.name = m1.name + "+" + m2.name;
    sum.quandle = m1.quandle;
    sum.arcs = r1.arcs;
    for (const std::string& a : r2.arcs)
        if (a != merged) sum.arcs.push_back(a);
    sum.interactions = r1.interactions;
    sum.interactions.insert(sum.interactions.end(), r2.interactions.begin(),
                            r2.interactions.end());
    auto add_registers = [&](std::vector<std::string>& dst, const std::vector<std::string>& src) {
        for (const std::string& a : src)
            if (std::find(dst.begin(), dst.end(), a) == dst.end()) dst.push_back(a);
    };
    add_registers(sum.inputs, r1.inputs);
    add_registers(sum.inputs, r2.inputs);
    add_registers(sum.outputs, r1.outputs);
    add_registers(sum.outputs, r2.outputs);
    // drop register designations the identification has invalidated
    std::erase_if(sum.inputs, [&](const std::string& a) { return sum.output_patient_count(a) > 0; });
    std::erase_if(sum.outputs, [&](const std::string& a) { return sum.input_patient_count(a) > 0; });

    const ValidationReport rep = validate(sum);
    if (!rep.ok())
        throw std::invalid_argument("connect_sum: identification breaks machine invariants: " +
                                    rep.violations.front());
    return sum;
}

} // namespace tangleforge
