#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "ctxcd/fixtures.hpp"
#include "ctxcd/scm.hpp"

using namespace ctxcd;

namespace {

GeneratorConfig default_generator(CycleMode cycles, std::set<EditOp> ops) {
    GeneratorConfig g;
    g.edits.cycles = cycles;
    g.edits.ops = std::move(ops);
    return g;
}

int nonzero(const Eigen::MatrixXd& m) { return static_cast<int>((m.array() != 0.0).count()); }

}  // namespace

TEST_CASE("link count and feasibility") {
    CHECK(link_count(8, 0.4) == 22);
    CHECK(link_count(7, 0.4) == 17);
    Rng rng(1);
    CHECK_THROWS_AS(generate_base(8, 0.6, default_coefficient_pool(), rng), std::invalid_argument);
    CHECK_THROWS_AS(generate_base(8, 0.0, default_coefficient_pool(), rng), std::invalid_argument);
}

TEST_CASE("base graphs are acyclic with the requested link count and pool") {
    const auto& pool = default_coefficient_pool();
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        Rng rng(seed);
        const auto base = generate_base(8, 0.4, pool, rng);
        CHECK(nonzero(base.coeff) == 22);
        CHECK(is_acyclic(base.mechanism_graph()));
        for (int i = 0; i < 8; ++i)
            for (int j = 0; j < 8; ++j)
                if (base.coeff(i, j) != 0.0)
                    CHECK(std::find(pool.begin(), pool.end(), base.coeff(i, j)) != pool.end());
        const auto withk = assign_indicator(base, rng, 0.2);
        CHECK(withk.noise_scale(withk.indicator_index) == doctest::Approx(0.2));
        CHECK(withk.noise_scale.sum() == doctest::Approx(7.2));
    }
}

TEST_CASE("indicator thresholds follow linear-interpolated quantiles") {
    std::vector<double> v(10);
    std::iota(v.begin(), v.end(), 1.0);
    std::shuffle(v.begin(), v.end(), Rng(3));

    // Median of 1..10 is 5.5, so 6..10 land in context 2.
    const auto r = threshold_indicator(v, IndicatorConfig::make(2, 1.0));
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(r[i] == (v[i] >= 5.5 ? 2 : 1));

    // Level 0.5^1.5 = 0.35355 -> position 3.182 -> threshold 4.182.
    const auto skew = threshold_indicator(v, IndicatorConfig::make(2, 1.5));
    CHECK(std::count(skew.begin(), skew.end(), 2) == 6);

    // Positions 3 and 6 give thresholds 4 and 7.
    const auto three = threshold_indicator(v, IndicatorConfig::make(3, 1.0));
    CHECK(std::count(three.begin(), three.end(), 1) == 3);
    CHECK(std::count(three.begin(), three.end(), 3) == 4);

    const std::vector<double> constant(5, 2.0);
    CHECK_THROWS_AS(threshold_indicator(constant, IndicatorConfig::make(2, 1.0)), std::invalid_argument);
    CHECK_THROWS_AS(threshold_indicator(std::vector<double>{}, IndicatorConfig::make(2, 1.0)), std::invalid_argument);
    CHECK_THROWS_AS(IndicatorConfig::make(1, 1.0), std::invalid_argument);
}

TEST_CASE("edit configuration errors") {
    Rng rng(4);
    auto base = assign_indicator(generate_base(8, 0.4, default_coefficient_pool(), rng), rng);
    EditConfig cfg;
    cfg.cycles = CycleMode::Require;
    cfg.ops = {EditOp::Remove};
    CHECK_THROWS_AS(edit_contexts(base, cfg, rng), std::invalid_argument);
    cfg.cycles = CycleMode::RequireLen2;
    cfg.ops = {EditOp::Add};
    CHECK_THROWS_AS(edit_contexts(base, cfg, rng), std::invalid_argument);
}

TEST_CASE("generated systems satisfy the modelling assumptions of their cycle mode") {
    struct Case {
        CycleMode mode;
        std::set<EditOp> ops;
    };
    const std::vector<Case> cases{{CycleMode::Forbid, {EditOp::Remove}},
                                  {CycleMode::Forbid, {EditOp::Add, EditOp::Remove, EditOp::Flip}},
                                  {CycleMode::Require, {EditOp::Add, EditOp::Flip}},
                                  {CycleMode::RequireLen2, {EditOp::Add, EditOp::Remove, EditOp::Flip}}};
    for (const auto& c : cases) {
        int built = 0;
        for (std::uint64_t seed = 0; seed < 40; ++seed) {
            Rng rng(seed);
            MultiContextScm scm;
            try {
                scm = generate_scm(default_generator(c.mode, c.ops), rng);
            } catch (const GenerationFailed&) {
                continue;
            }
            ++built;
            const auto rep = check_assumptions(scm);
            CHECK(rep.weak_context_acyclic);
            CHECK(rep.weak_context_sufficient);
            CHECK(rep.causal_sufficient);
            CHECK(scm.per_context_coeff.at(1) == scm.base.coeff);
            CHECK(static_cast<int>(scm.edits.size()) == 1);
            CHECK(scm.edits.front().context == 2);
            switch (c.mode) {
                case CycleMode::Forbid: CHECK(rep.union_acyclic); break;
                case CycleMode::Require: CHECK_FALSE(rep.union_acyclic); break;
                case CycleMode::RequireLen2:
                    CHECK_FALSE(rep.union_acyclic);
                    CHECK(rep.cycles_are_flips);
                    CHECK(rep.strong_context_acyclic);
                    break;
            }
            // Removal drops exactly one coefficient, addition adds one, flips keep the count.
            const auto& e = scm.edits.front();
            const int delta = nonzero(scm.per_context_coeff.at(2)) - nonzero(scm.base.coeff);
            if (e.op == EditOp::Add) CHECK(delta == 1);
            if (e.op == EditOp::Remove) CHECK(delta == -1);
            if (e.op == EditOp::Flip) CHECK(delta == 0);
            CHECK(e.target != scm.base.indicator_index);
            CHECK(e.partner != scm.base.indicator_index);
        }
        CHECK(built > 20);
    }
}

TEST_CASE("several edits per context") {
    GeneratorConfig g;
    g.edits.n_change = 3;
    g.edits.n_contexts = 3;
    g.edits.ops = {EditOp::Remove, EditOp::Add};
    Rng rng(9);
    const auto scm = generate_scm(g, rng);
    CHECK(scm.edits.size() == 6);
    CHECK(scm.per_context_coeff.size() == 3);
    CHECK(check_assumptions(scm).union_acyclic);
}

TEST_CASE("sampling reproduces the fixture mechanisms exactly") {
    const auto scm = endogenous_selection_scm();
    const int n = 400;
    Rng rng(17);
    const auto data = sample(scm, n, rng);
    REQUIRE(data.num_system() == 3);

    Rng replay(17);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd eta(n, 4);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < 4; ++j) eta(i, j) = normal(replay);

    std::vector<double> k(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) k[static_cast<std::size_t>(i)] = eta(i, 0) + eta(i, 1) + eta(i, 3);
    auto sorted = k;
    std::sort(sorted.begin(), sorted.end());
    const double median = 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);

    for (int i = 0; i < n; ++i) {
        const int r = k[static_cast<std::size_t>(i)] >= median ? 2 : 1;
        CHECK(data.context()[static_cast<std::size_t>(i)] == r);
        CHECK(data.system()(i, 0) == doctest::Approx(eta(i, 0)));
        CHECK(data.system()(i, 1) == doctest::Approx(eta(i, 1)));
        const double y = (r == 2 ? 1.5 * eta(i, 1) : 0.0) + eta(i, 2);
        CHECK(data.system()(i, 2) == doctest::Approx(y));
    }
}

TEST_CASE("sampling is deterministic and balanced") {
    Rng g(2);
    const auto scm = generate_scm(GeneratorConfig{}, g);
    Rng a(99), b(99);
    const auto d1 = sample(scm, 2000, a);
    const auto d2 = sample(scm, 2000, b);
    CHECK(d1.system() == d2.system());
    CHECK(d1.context() == d2.context());
    CHECK(d1.context_values() == std::vector<int>{1, 2});
    CHECK(d1.count_context(1) == 1000);
    Rng c(1);
    CHECK_THROWS_AS(sample(scm, 0, c), std::invalid_argument);
}

TEST_CASE("ground truth carries R-edges into every context") {
    Rng rng(6);
    const auto scm = generate_scm(GeneratorConfig{}, rng);
    const auto truth = ground_truth(scm);
    const int r = scm.num_system();
    REQUIRE(truth.descriptive.size() == 2);
    for (int c : scm.edited_nodes())
        for (const auto& [ctx, g] : truth.descriptive) CHECK(g.has_directed(r, scm.graph_index(c)));
    CHECK(truth.union_graph.context_node() == r);
    CHECK(truth.descriptive.at(1).node(r).name == "R");
}

TEST_CASE("SCM and ground-truth JSON round trips") {
    Rng rng(12);
    GeneratorConfig g;
    g.edits.ops = {EditOp::Flip, EditOp::Add};
    g.edits.cycles = CycleMode::RequireLen2;
    const auto scm = generate_scm(g, rng);
    const auto back = scm_from_json(scm_to_json(scm));
    CHECK(back.base.coeff == scm.base.coeff);
    CHECK(back.base.indicator_index == scm.base.indicator_index);
    CHECK(back.per_context_coeff == scm.per_context_coeff);
    CHECK(back.r_children == scm.r_children);
    CHECK(back.edits.size() == scm.edits.size());
    Rng s1(5), s2(5);
    CHECK(sample(back, 300, s1).system() == sample(scm, 300, s2).system());

    const auto truth = ground_truth(scm);
    const auto t2 = ground_truth_from_json(ground_truth_to_json(truth));
    CHECK(t2.union_graph == truth.union_graph);
    CHECK(t2.labeled_union == truth.labeled_union);
    CHECK(t2.descriptive == truth.descriptive);
}
