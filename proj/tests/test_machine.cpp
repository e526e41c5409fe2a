#include "tangleforge/machine.hpp"
#include "tangleforge/tm_format.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

using namespace tangleforge;

namespace {

std::string fixture(const std::string& name) {
    return std::string(TF_FIXTURE_DIR) + "/" + name;
}

TangleMachine load(const std::string& name) { return parse_tm_file(fixture(name)).machine; }

/// Oracle: filter every assignment of carrier elements to arcs.
long long count_by_filter(const TangleMachine& m, const QuandleInstance& q) {
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

} // namespace

TEST_CASE("fixture machines are structurally sound") {
    for (const char* name : {"unknot.tm", "trefoil.tm", "trefoil_open.tm", "figure8.tm",
                             "r3pair_left.tm", "r3pair_right.tm", "kink.tm", "r2demo.tm",
                             "chain_linear.tm"})
        CHECK(validate(load(name)).ok());
}

TEST_CASE("validate reports invariant breaches") {
    TangleMachine m = load("trefoil.tm");
    SECTION("double input patient") {
        m.interactions[1].pairs[0].first = "a";  // a already consumed by x1
        const ValidationReport rep = validate(m);
        REQUIRE_FALSE(rep.ok());
        CHECK(rep.violations[0].find("'a'") != std::string::npos);
    }
    SECTION("weight out of domain over a weighted quandle") {
        TangleMachine chain = load("chain_linear.tm");
        chain.interactions[0].weight = 1.5;
        const ValidationReport rep = validate(chain);
        REQUIRE_FALSE(rep.ok());
        CHECK(rep.violations[0].find("i1") != std::string::npos);
    }
    SECTION("missing weight over a weighted quandle") {
        TangleMachine chain = load("chain_linear.tm");
        chain.interactions[0].weight.reset();
        CHECK_FALSE(validate(chain).ok());
    }
    SECTION("register invariants") {
        m.inputs = {"a"};  // a is x2's output patient
        CHECK_FALSE(validate(m).ok());
    }
    SECTION("undeclared arcs") {
        m.interactions[0].agent = "ghost";
        CHECK_FALSE(validate(m).ok());
    }
    SECTION("agent as patient outside the kink form") {
        TangleMachine bad = load("r3pair_left.tm");
        bad.interactions[0].pairs.emplace_back("z", "v");
        bad.interactions[0].agent = "v";
        CHECK_FALSE(validate(bad).ok());
    }
}

TEST_CASE("single-interaction machine validates cleanly") {
    TangleMachine m;
    m.quandle = QuandleInstance::dihedral(3);
    m.arcs = {"a", "b", "c"};
    m.interactions = {{"i", "b", {{"a", "c"}}, {}, {}, false}};
    CHECK(validate(m).ok());
}

TEST_CASE("trefoil colours from the three-colouring") {
    const TangleMachine m = load("trefoil.tm");
    Coloring good{{"a", 0L}, {"b", 1L}, {"c", 2L}};
    CHECK(check_coloring(m, good));
    Coloring constant{{"a", 1L}, {"b", 1L}, {"c", 1L}};
    CHECK(check_coloring(m, constant));
    Coloring bad{{"a", 0L}, {"b", 1L}, {"c", 1L}};
    CHECK_FALSE(check_coloring(m, bad));
    Coloring missing{{"a", 0L}};
    CHECK_THROWS(check_coloring(m, missing));
}

TEST_CASE("propagation") {
    SECTION("single interaction") {
        TangleMachine m;
        m.quandle = QuandleInstance::dihedral(3);
        m.arcs = {"in", "agent", "out"};
        m.interactions = {{"i", "agent", {{"in", "out"}}, {}, {}, false}};
        const Coloring full = propagate(m, {{"in", 0L}, {"agent", 1L}});
        CHECK(std::get<long>(full.at("out")) == 2);
        CHECK(check_coloring(m, full));
    }
    SECTION("chained linear fusions give 2.5") {
        const TangleMachine m = load("chain_linear.tm");
        Coloring partial;
        partial["x"] = Eigen::VectorXd(Eigen::VectorXd::Constant(1, 0.0));
        partial["y"] = Eigen::VectorXd(Eigen::VectorXd::Constant(1, 2.0));
        partial["z"] = Eigen::VectorXd(Eigen::VectorXd::Constant(1, 4.0));
        const Coloring full = propagate(m, partial);
        CHECK(std::get<Eigen::VectorXd>(full.at("f"))[0] == Catch::Approx(2.5));
        CHECK(check_coloring(m, full));
    }
    SECTION("closed machine is cyclic") {
        const TangleMachine m = load("trefoil.tm");
        try {
            propagate(m, {{"a", 0L}});
            FAIL("expected cyclic error");
        } catch (const PropagationError& e) {
            CHECK(e.kind == PropagationError::Kind::cyclic);
        }
    }
    SECTION("arc outside every interaction is underdetermined") {
        TangleMachine m = load("trefoil.tm");
        m.arcs.push_back("loose");
        try {
            propagate(m, {{"a", 0L}, {"b", 1L}, {"c", 2L}});
            FAIL("expected underdetermined error");
        } catch (const PropagationError& e) {
            CHECK(e.kind == PropagationError::Kind::underdetermined);
        }
    }
    SECTION("conflicting colours are inconsistent") {
        const TangleMachine m = load("r3pair_left.tm");
        Coloring partial{{"x", 0L}, {"y", 1L}, {"z", 2L}, {"u", 0L}};  // u must be 2
        try {
            propagate(m, partial);
            FAIL("expected inconsistent error");
        } catch (const PropagationError& e) {
            CHECK(e.kind == PropagationError::Kind::inconsistent);
        }
    }
    SECTION("propagated colourings always satisfy the check") {
        const TangleMachine m = load("r3pair_left.tm");
        for (long x = 0; x < 3; ++x)
            for (long y = 0; y < 3; ++y) {
                const Coloring full = propagate(m, {{"x", x}, {"y", y}, {"z", 1L}});
                CHECK(check_coloring(m, full));
            }
    }
}

TEST_CASE("colouring counts match the brute-force oracle") {
    struct Row {
        const char* file;
        int k;
        long long expect;
    };
    for (const Row& row : std::initializer_list<Row>{{"trefoil.tm", 3, 9},
                                                     {"trefoil.tm", 5, 5},
                                                     {"figure8.tm", 3, 3},
                                                     {"figure8.tm", 5, 25},
                                                     {"trefoil_open.tm", 3, 9},
                                                     {"trefoil_open.tm", 5, 5},
                                                     {"kink.tm", 3, 9},
                                                     {"r2demo.tm", 3, 9}}) {
        const TangleMachine m = load(row.file);
        const QuandleInstance q = QuandleInstance::dihedral(row.k);
        const EnumerationResult res = enumerate_colorings(m, q);
        INFO(row.file << " over dihedral(" << row.k << ")");
        CHECK(res.count == row.expect);
        CHECK(res.count == count_by_filter(m, q));
        for (const Coloring& c : res.colorings) {
            TangleMachine mq = m;
            mq.quandle = q;
            CHECK(check_coloring(mq, c));
        }
    }
}

TEST_CASE("unknot counts equal the carrier size") {
    const TangleMachine m = load("unknot.tm");
    for (int k : {2, 3, 5, 7, 11})
        CHECK(enumerate_colorings(m, QuandleInstance::dihedral(k)).count == k);
}

TEST_CASE("constant colourings put the carrier size below every count") {
    for (const char* name : {"trefoil.tm", "figure8.tm", "r3pair_left.tm", "kink.tm"})
        for (int k : {3, 5})
            CHECK(enumerate_colorings(load(name), QuandleInstance::dihedral(k)).count >= k);
}

TEST_CASE("counts are invariant under arc relabeling") {
    Rng rng(11);
    const TangleMachine m = load("figure8.tm");
    for (int trial = 0; trial < 5; ++trial) {
        TangleMachine renamed = m;
        std::map<std::string, std::string> perm;
        std::vector<std::string> shuffled = m.arcs;
        for (std::size_t i = shuffled.size(); i > 1; --i)
            std::swap(shuffled[i - 1], shuffled[rng.below(i)]);
        for (std::size_t i = 0; i < m.arcs.size(); ++i) perm[m.arcs[i]] = "arc_" + shuffled[i];
        for (std::string& a : renamed.arcs) a = perm[a];
        for (Interaction& in : renamed.interactions) {
            in.agent = perm[in.agent];
            for (auto& p : in.pairs) {
                p.first = perm[p.first];
                p.second = perm[p.second];
            }
        }
        CHECK(enumerate_colorings(renamed, QuandleInstance::dihedral(5)).count == 25);
    }
}

TEST_CASE("enumeration caps") {
    const TangleMachine m = load("trefoil.tm");
    EnumerationCaps caps;
    caps.max_carrier = 4;
    CHECK_THROWS(enumerate_colorings(m, QuandleInstance::dihedral(5), caps));
    caps = EnumerationCaps{};
    caps.max_arcs = 2;
    CHECK_THROWS(enumerate_colorings(m, QuandleInstance::dihedral(3), caps));
    CHECK_THROWS(enumerate_colorings(m, QuandleInstance::linear(1)));
}

TEST_CASE("connect sum") {
    const TangleMachine open = load("trefoil_open.tm");
    const TangleMachine unknot = load("unknot.tm");
    SECTION("trefoil with unknot keeps 9 colourings") {
        const TangleMachine sum = connect_sum(open, "ah", unknot, "a");
        CHECK(validate(sum).ok());
        CHECK(enumerate_colorings(sum, QuandleInstance::dihedral(3)).count == 9);
        CHECK(enumerate_colorings(sum, QuandleInstance::dihedral(3)).count ==
              count_by_filter(sum, QuandleInstance::dihedral(3)));
    }
    SECTION("trefoil with trefoil gives 27") {
        const TangleMachine sum = connect_sum(open, "ah", open, "at");
        CHECK(validate(sum).ok());
        CHECK(enumerate_colorings(sum, QuandleInstance::dihedral(3)).count == 27);
        CHECK(enumerate_colorings(sum, QuandleInstance::dihedral(3)).count ==
              count_by_filter(sum, QuandleInstance::dihedral(3)));
    }
    SECTION("mid-machine patient arcs are rejected") {
        CHECK_THROWS(connect_sum(open, "b", open, "at"));   // b is consumed by x1... and produced
        CHECK_THROWS(connect_sum(open, "ah", open, "ah"));  // ah is produced in m2
    }
    SECTION("ids are freshened deterministically") {
        const TangleMachine sum = connect_sum(open, "ah", unknot, "a");
        CHECK(sum.has_arc("at#1"));
        CHECK(sum.has_arc("ah#1"));  // merged arc keeps m1's name
        CHECK_FALSE(sum.has_arc("a#2"));
    }
}
