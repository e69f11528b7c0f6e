#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "ctxcd/discovery.hpp"
#include "ctxcd/fixtures.hpp"
#include "ctxcd/scm.hpp"

using namespace ctxcd;

namespace {

DirectedMixedGraph plain(int n) {
    std::vector<Node> nodes;
    for (int i = 0; i < n; ++i) nodes.push_back({"V" + std::to_string(i), false});
    return DirectedMixedGraph(nodes);
}

SkeletonTest d_sep_test(const DirectedMixedGraph& g) {
    return [&g](int i, int j, const std::vector<int>& s) {
        return TestOutcome{d_separated(g, {i, j, {s.begin(), s.end()}}), std::nullopt};
    };
}

std::vector<int> iota_vec(int n) {
    std::vector<int> v(static_cast<std::size_t>(n));
    std::iota(v.begin(), v.end(), 0);
    return v;
}

CiDispatcher oracle_for(const GroundTruth& t) {
    return CiDispatcher::oracle({t.descriptive, t.union_graph}, static_cast<int>(t.union_graph.num_nodes()) - 1);
}

DiscoveryConfig config(Method m, LinkMode links = LinkMode::None, const DirectedMixedGraph* truth = nullptr) {
    DiscoveryConfig c;
    c.method = m;
    if (truth) c.links = LinkAssumptions::from_graph(links, *truth);
    return c;
}

std::optional<MultiContextScm> try_generate(CycleMode mode, std::uint64_t seed) {
    GeneratorConfig g;
    g.edits.cycles = mode;
    g.edits.ops = {EditOp::Add, EditOp::Remove, EditOp::Flip};
    Rng rng(seed);
    try {
        return generate_scm(g, rng);
    } catch (const GenerationFailed&) {
        return std::nullopt;
    }
}

/// Relabels system nodes by `perm` (R stays last).
DirectedMixedGraph relabel(const DirectedMixedGraph& g, const std::vector<int>& perm) {
    DirectedMixedGraph out(g.nodes());
    auto map = [&](int v) { return v < static_cast<int>(perm.size()) ? perm[static_cast<std::size_t>(v)] : v; };
    for (auto e : g.edges()) {
        e.src = map(e.src);
        e.dst = map(e.dst);
        out.add_edge(e);
    }
    return out;
}

}  // namespace

TEST_CASE("skeleton: independent columns give the empty graph") {
    auto always = [](int, int, const std::vector<int>&) { return TestOutcome{true, std::nullopt}; };
    const auto sk = pc_stable_skeleton(2, {0, 1}, always);
    CHECK(sk.adjacencies.empty());
    CHECK(sk.sepsets.at({0, 1}).set.empty());
}

TEST_CASE("skeleton and orientation: chain and collider") {
    auto chain = plain(3);
    chain.add_directed(0, 1);
    chain.add_directed(1, 2);
    const auto sk = pc_stable_skeleton(3, iota_vec(3), d_sep_test(chain));
    CHECK(sk.adjacencies == std::set<NodePair>{{0, 1}, {1, 2}});
    CHECK(sk.sepsets.at({0, 2}).set == std::vector<int>{1});
    const auto o = orient(plain(3), sk.adjacencies, sk.sepsets);
    CHECK(o.has_undirected(0, 1));
    CHECK(o.has_undirected(1, 2));

    auto collider = plain(3);
    collider.add_directed(0, 1);
    collider.add_directed(2, 1);
    const auto sc = pc_stable_skeleton(3, iota_vec(3), d_sep_test(collider));
    CHECK(sc.adjacencies == std::set<NodePair>{{0, 1}, {1, 2}});
    CHECK(sc.sepsets.at({0, 2}).set.empty());
    const auto oc = orient(plain(3), sc.adjacencies, sc.sepsets);
    CHECK(oc.has_directed(0, 1));
    CHECK(oc.has_directed(2, 1));
    CHECK_FALSE(oc.has_directed(1, 0));
}

TEST_CASE("orientation: Meek rules") {
    // R1: 0 -> 1 - 2 with 0, 2 separated by {1} becomes 1 -> 2.
    {
        auto g = plain(4);
        SepsetMap seps{{{0, 2}, {{1}, {}, false}}, {{0, 3}, {{}, {}, false}}, {{2, 3}, {{}, {}, false}},
                       {{1, 3}, {{}, {}, false}}};
        const auto o = orient(plain(4), {{0, 1}, {1, 2}}, seps, {{0, 1}});
        CHECK(o.has_directed(1, 2));
        CHECK_FALSE(o.has_directed(2, 1));
    }
    // R2: 0 -> 1 -> 2 and 0 - 2 becomes 0 -> 2.
    {
        const auto o = orient(plain(3), {{0, 1}, {1, 2}, {0, 2}}, {}, {{0, 1}, {1, 2}});
        CHECK(o.has_directed(0, 2));
    }
    // R3: 0 - 1, 0 - 2, 0 - 3, 1 -> 3 <- 2, with 1 and 2 separated, gives 0 -> 3.
    {
        SepsetMap seps{{{1, 2}, {{0}, {}, false}}};
        const auto o = orient(plain(4), {{0, 1}, {0, 2}, {0, 3}, {1, 3}, {2, 3}}, seps);
        CHECK(o.has_directed(1, 3));
        CHECK(o.has_directed(2, 3));
        CHECK(o.has_directed(0, 3));
        CHECK(o.has_undirected(0, 1));
    }
    // R1 is not applied across an assumed non-adjacency.
    {
        SepsetMap seps{{{0, 2}, {{}, {}, true}}};
        const auto o = orient(plain(3), {{0, 1}, {1, 2}}, seps, {{0, 1}});
        CHECK(o.has_undirected(1, 2));
    }
    // Opposing colliders leave two directed records.
    {
        auto g = plain(4);
        SepsetMap seps{{{0, 2}, {{}, {}, false}}, {{1, 3}, {{}, {}, false}}, {{0, 3}, {{1, 2}, {}, false}}};
        const auto o = orient(plain(4), {{0, 1}, {1, 2}, {2, 3}}, seps);
        CHECK(o.has_directed(1, 2));
        CHECK(o.has_directed(2, 1));
    }
}

TEST_CASE("endogenous selection system under the oracle") {
    const auto truth = ground_truth(endogenous_selection_scm());
    const auto cit = oracle_for(truth);
    constexpr int x = 0, t = 1, y = 2, r = 3;

    const auto ac = pc_ac(cit, config(Method::AC));
    const auto& g1 = ac.context_graphs.at(1);
    const auto& g2 = ac.context_graphs.at(2);
    CHECK_FALSE(g1.adjacent(t, y));
    CHECK(g1.adjacent(r, y));
    CHECK(g2.adjacent(t, y));
    CHECK_FALSE(g1.adjacent(x, t));
    CHECK_FALSE(g2.adjacent(x, t));
    CHECK(g1.skeleton() == truth.descriptive.at(1).skeleton());
    CHECK(g2.skeleton() == truth.descriptive.at(2).skeleton());
    CHECK(g1.has_directed(x, r));
    CHECK(g1.has_directed(t, r));

    const auto m = pc_masked(cit, config(Method::Masked));
    for (const auto& [ctx, g] : m.context_graphs) {
        CHECK(g.adjacent(x, t));
        CHECK(g.neighbors(r).empty());
    }

    const auto known = pc_ac(cit, config(Method::AC, LinkMode::RChildren, &truth.union_graph));
    CHECK(known.context_graphs.at(1).has_directed(r, y));
    CHECK_FALSE(known.context_graphs.at(1).has_directed(y, r));
}

TEST_CASE("oracle soundness and intersection equivalence on generated systems") {
    int checked = 0;
    for (auto mode : {CycleMode::Forbid, CycleMode::RequireLen2}) {
        for (std::uint64_t seed = 0; seed < 25; ++seed) {
            const auto scm = try_generate(mode, 1000 + seed);
            if (!scm) continue;
            const auto truth = ground_truth(*scm);
            const auto cit = oracle_for(truth);
            const auto ac = pc_ac(cit, config(Method::AC));
            const auto pb = pc_baseline(cit, config(Method::Baseline));
            for (const auto& [r, g] : truth.descriptive) {
                REQUIRE(ac.context_graphs.at(r).skeleton() == g.skeleton());
                REQUIRE(pb.context_graphs.at(r).skeleton() == g.skeleton());
            }
            CHECK(pb.test_count >= ac.test_count);
            if (mode == CycleMode::RequireLen2) {
                for (const auto& [r, g] : ac.context_graphs) CHECK(is_acyclic(truth.descriptive.at(r)));
                CHECK(ac.union_graph.skeleton() == truth.union_graph.skeleton());
            }
            ++checked;
        }
    }
    CHECK(checked > 30);
}

TEST_CASE("pooled search recovers the union or its acyclification") {
    for (std::uint64_t seed = 0; seed < 15; ++seed) {
        const auto acyclic = try_generate(CycleMode::Forbid, 50 + seed);
        if (acyclic) {
            const auto t = ground_truth(*acyclic);
            CHECK(pc_pooled(oracle_for(t), config(Method::Pooled)).union_graph.skeleton() == t.union_graph.skeleton());
        }
        GeneratorConfig g;
        g.edits.cycles = CycleMode::Require;
        g.edits.ops = {EditOp::Add, EditOp::Flip};
        Rng rng(70 + seed);
        try {
            const auto t = ground_truth(generate_scm(g, rng));
            const auto p = pc_pooled(oracle_for(t), config(Method::Pooled));
            CHECK(p.union_graph.skeleton() == acyclify(t.union_graph).skeleton());
            CHECK(p.context_graphs.empty());
        } catch (const GenerationFailed&) {
        }
    }
}

TEST_CASE("empty truth gives an empty pooled skeleton") {
    auto g = DirectedMixedGraph::with_system_nodes(3, true);
    const auto cit = CiDispatcher::oracle({{{1, g}, {2, g}}, g}, 3);
    CHECK(pc_pooled(cit, config(Method::Pooled)).union_graph.skeleton().empty());
    CHECK(pc_ac(cit, config(Method::AC)).union_graph.skeleton().empty());
}

TEST_CASE("skeletons do not depend on variable order") {
    for (std::uint64_t seed = 0; seed < 12; ++seed) {
        const auto scm = try_generate(CycleMode::Forbid, 300 + seed);
        if (!scm) continue;
        const auto truth = ground_truth(*scm);
        const int d = scm->num_system();
        std::vector<int> perm(static_cast<std::size_t>(d));
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), Rng(seed));
        std::vector<int> inverse(perm.size());
        for (std::size_t i = 0; i < perm.size(); ++i) inverse[static_cast<std::size_t>(perm[i])] = static_cast<int>(i);

        GroundTruth moved;
        for (const auto& [r, g] : truth.descriptive) moved.descriptive.emplace(r, relabel(g, perm));
        moved.union_graph = relabel(truth.union_graph, perm);
        for (Method m : {Method::AC, Method::Masked, Method::Pooled, Method::Baseline}) {
            const auto a = discover(oracle_for(truth), config(m));
            const auto b = discover(oracle_for(moved), config(m));
            CHECK(relabel(b.union_graph, inverse).skeleton() == a.union_graph.skeleton());
            for (const auto& [r, g] : a.context_graphs)
                CHECK(relabel(b.context_graphs.at(r), inverse).skeleton() == g.skeleton());
        }
    }
}

TEST_CASE("with all R-links known no test has R as an endpoint") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto scm = try_generate(CycleMode::Forbid, 400 + seed);
        if (!scm) continue;
        const auto truth = ground_truth(*scm);
        Rng rng(seed);
        const auto data = sample(*scm, 500, rng);
        auto cit = CiDispatcher::finite_sample(data);
        auto log = std::make_shared<TestLog>();
        cit.set_log(log);
        for (Method m : {Method::AC, Method::Pooled, Method::Baseline}) {
            const auto res = discover(cit, config(m, LinkMode::RAll, &truth.union_graph));
            const int r = scm->num_system();
            for (const auto& [a, b] : truth.union_graph.skeleton())
                if (b == r)
                    for (const auto& [ctx, g] : res.context_graphs) CHECK(g.adjacent(a, b));
        }
        std::ostringstream out;
        log->write_csv(out);
        CHECK(out.str().find("mixed") == std::string::npos);
        CHECK(log->size() > 0);
    }
}

TEST_CASE("separating sets lie inside a frozen adjacency set") {
    std::mt19937_64 rng(3);
    for (int rep = 0; rep < 40; ++rep) {
        auto g = plain(7);
        std::bernoulli_distribution coin(0.35);
        for (int a = 0; a < 7; ++a)
            for (int b = a + 1; b < 7; ++b)
                if (coin(rng)) g.add_directed(a, b);
        SkeletonOptions opts;
        opts.record_trace = true;
        const auto sk = pc_stable_skeleton(7, iota_vec(7), d_sep_test(g), opts);
        CHECK(sk.adjacencies == g.skeleton());
        for (const auto& [pair, sep] : sk.sepsets) {
            const auto& frozen = sk.frozen.at(static_cast<std::size_t>(sk.removal_level.at(pair)));
            auto inside = [&](int v) {
                return std::all_of(sep.set.begin(), sep.set.end(),
                                   [&](int s) { return frozen[static_cast<std::size_t>(v)].count(s) > 0; });
            };
            CHECK((inside(pair.first) || inside(pair.second)));
            CHECK(static_cast<int>(sep.set.size()) == sk.removal_level.at(pair));
        }
    }
}

TEST_CASE("edges are kept when tests are inconclusive") {
    Rng rng(1);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd m(14, 3);
    for (int i = 0; i < 14; ++i)
        for (int j = 0; j < 3; ++j) m(i, j) = normal(rng);
    std::vector<int> r(14, 1);
    std::fill(r.begin() + 7, r.end(), 2);
    const Dataset data(m, r);
    const auto res = pc_masked(CiDispatcher::finite_sample(data), config(Method::Masked));
    for (const auto& [ctx, g] : res.context_graphs) CHECK(g.skeleton().size() == 3);
}

TEST_CASE("configuration errors") {
    auto g = DirectedMixedGraph::with_system_nodes(2, true);
    const auto single = CiDispatcher::oracle({{{1, g}}, g}, 2);
    CHECK_THROWS_AS(pc_ac(single, config(Method::AC)), DiscoveryError);
    CHECK_NOTHROW(pc_pooled(single, config(Method::Pooled)));
    auto bad = config(Method::Pooled);
    bad.alpha = 1.5;
    CHECK_THROWS_AS(pc_pooled(single, bad), DiscoveryError);
    LinkAssumptions links;
    links.mode = LinkMode::RChildren;
    links.fixed_edges = {{0, 1}};
    CHECK_THROWS_AS(links.validate(2), DiscoveryError);
    CHECK_THROWS_AS(method_from_string("fci"), std::invalid_argument);
}
