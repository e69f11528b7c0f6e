#include <doctest.h>

#include <cmath>

#include "ctxcd/citest.hpp"
#include "ctxcd/fixtures.hpp"
#include "ctxcd/scm.hpp"

using namespace ctxcd;

namespace {

// Columns X1 = z, X2 = w, X3 = y, X4 = x, R. Reference p-values below were
// computed with numpy least squares and scipy.stats (norm.sf, f.sf).
Dataset reference_data() {
    const std::vector<double> z{0.001, 0.299, -0.274, -0.891, -0.455, -0.992, 0.06, 1.34,
                                -0.492, -0.62, 0.49, 0.357, 0.105, -0.93, -0.029, 0.695};
    const std::vector<double> w{-1.344, -0.458, -1.901, -1.29, -1.842, -0.235, -1.267, 0.271,
                                0.157, -0.187, -2.517, -0.539, -0.049, 0.113, -1.53, -0.478};
    const std::vector<double> y{-0.978, -0.629, 0.896, -1.342, -0.306, 0.289, -0.548, 0.692,
                                0.193, 0.036, -1.489, 0.644, 2.673, -2.888, 1.744, 0.92};
    const std::vector<double> x{-1.179, 1.967, -0.135, -2.161, -0.89, -0.013, -0.666, 1.461,
                                -0.25, 0.282, 0.677, -0.713, 0.236, -0.883, -0.499, -1.031};
    Eigen::MatrixXd m(16, 4);
    for (int i = 0; i < 16; ++i) {
        const auto k = static_cast<std::size_t>(i);
        m.row(i) << z[k], w[k], y[k], x[k];
    }
    std::vector<int> r(16, 1);
    std::fill(r.begin() + 8, r.end(), 2);
    return Dataset(m, r);
}

}  // namespace

TEST_CASE("query construction") {
    const auto q = CiQuery::make(0, 3, {2, 1, 2});
    CHECK(q.z == std::vector<int>{1, 2});
    CHECK_THROWS_AS(CiQuery::make(1, 1, {}), CiQueryError);
    CHECK_THROWS_AS(CiQuery::make(0, 1, {1}), CiQueryError);
}

TEST_CASE("partial correlation matches the reference computation") {
    const auto data = reference_data();
    auto v = partial_correlation_test(data, CiQuery::make(3, 2, {0}));
    CHECK_FALSE(v.inconclusive);
    CHECK(v.p_value == doctest::Approx(0.8734175503180511).epsilon(1e-9));
    CHECK(v.effective_n == 16);

    v = partial_correlation_test(data, CiQuery::make(3, 2, {0, 1}));
    CHECK(v.p_value == doctest::Approx(0.9933084866741128).epsilon(1e-9));

    // R in the conditioning set enters as a dummy code.
    v = partial_correlation_test(data, CiQuery::make(3, 2, {0, 4}));
    CHECK(v.p_value == doctest::Approx(0.8450906265491802).epsilon(1e-9));
}

TEST_CASE("mixed test matches the reference computation") {
    const auto data = reference_data();
    auto v = mixed_context_test(data, CiQuery::make(2, 4, {0}));
    CHECK_FALSE(v.inconclusive);
    CHECK(v.p_value == doctest::Approx(0.18936358095295697).epsilon(1e-9));
    v = mixed_context_test(data, CiQuery::make(4, 2, {}));
    CHECK(v.p_value == doctest::Approx(0.2165591065083164).epsilon(1e-9));
    CHECK_THROWS_AS(mixed_context_test(data, CiQuery::make(0, 2, {})), CiQueryError);
}

TEST_CASE("small samples are inconclusive and never accepted") {
    const auto data = reference_data();
    // Eight rows in context 2 fall below the ten-sample margin.
    const auto v = partial_correlation_test(data, CiQuery::make(3, 2, {}, 2));
    CHECK(v.inconclusive);
    CHECK_FALSE(v.accepts_independence(0.05));
    const auto wide = partial_correlation_test(data, CiQuery::make(3, 2, {0, 1}, 1));
    CHECK(wide.inconclusive);
}

TEST_CASE("collinear conditioning sets are inconclusive") {
    auto data = reference_data();
    Eigen::MatrixXd m = data.system();
    m.col(1) = 2.0 * m.col(0);
    const Dataset dup(m, data.context());
    const auto v = partial_correlation_test(dup, CiQuery::make(3, 2, {0, 1}));
    CHECK(v.inconclusive);
}

TEST_CASE("context-restricted tests equal tests on the masked rows") {
    const auto scm = endogenous_selection_scm();
    Rng rng(31);
    const auto data = sample(scm, 600, rng);
    for (int r : {1, 2}) {
        const auto masked = data.masked(r);
        const auto a = partial_correlation_test(data, CiQuery::make(0, 1, {2}, r));
        const auto b = partial_correlation_test(masked, CiQuery::make(0, 1, {2}));
        CHECK(a.p_value == doctest::Approx(b.p_value).epsilon(1e-12));
        CHECK(a.effective_n == static_cast<int>(masked.num_samples()));
        // An R in z is dropped for context-restricted queries.
        const auto c = partial_correlation_test(data, CiQuery::make(0, 1, {2, 3}, r));
        CHECK(c.p_value == doctest::Approx(a.p_value).epsilon(1e-12));
    }
}

TEST_CASE("oracle answers on the endogenous selection system") {
    const auto truth = ground_truth(endogenous_selection_scm());
    const OracleContext ctx{truth.descriptive, truth.union_graph};
    // X and T are marginally independent but dependent within a context.
    CHECK(oracle_test(ctx, CiQuery::make(0, 1, {})).independent);
    CHECK_FALSE(oracle_test(ctx, CiQuery::make(0, 1, {}, 1)).independent);
    // T and Y are separated by R in context 1 only.
    CHECK(oracle_test(ctx, CiQuery::make(1, 2, {}, 1)).independent);
    CHECK_FALSE(oracle_test(ctx, CiQuery::make(1, 2, {}, 2)).independent);
    CHECK_FALSE(oracle_test(ctx, CiQuery::make(1, 2, {3})).independent);
    CHECK_THROWS_AS(oracle_test(ctx, CiQuery::make(1, 3, {}, 1)), CiQueryError);
    CHECK_THROWS_AS(oracle_test(ctx, CiQuery::make(1, 2, {}, 7)), CiQueryError);

    auto cyclic = ctx;
    cyclic.descriptive_graphs.at(1).add_directed(2, 1);
    cyclic.descriptive_graphs.at(1).add_directed(1, 2);
    CHECK_THROWS_AS(oracle_test(cyclic, CiQuery::make(0, 2, {}, 1)), GraphError);
}

TEST_CASE("dispatcher routing and logging") {
    const auto data = reference_data();
    auto d = CiDispatcher::finite_sample(data);
    CHECK(d.route(CiQuery::make(0, 1, {})) == CiEngine::PartialCorrelation);
    CHECK(d.route(CiQuery::make(0, 4, {})) == CiEngine::MixedContext);
    CHECK(d.route(CiQuery::make(0, 1, {4})) == CiEngine::PartialCorrelation);
    CHECK(d.contexts() == std::vector<int>{1, 2});
    CHECK(d.num_system() == 4);

    auto log = std::make_shared<TestLog>();
    d.set_log(log);
    d.test(CiQuery::make(0, 1, {}));
    d.test(CiQuery::make(2, 4, {0}));
    CHECK(log->size() == 2);
    std::ostringstream out;
    log->write_csv(out);
    CHECK(out.str().find("mixed") != std::string::npos);

    const auto truth = ground_truth(endogenous_selection_scm());
    const auto o = CiDispatcher::oracle({truth.descriptive, truth.union_graph}, 3);
    CHECK(o.route(CiQuery::make(0, 3, {})) == CiEngine::Oracle);
    CHECK(o.contexts() == std::vector<int>{1, 2});
    CHECK_THROWS_AS(CiDispatcher::oracle({truth.descriptive, truth.union_graph}, 2), CiQueryError);
}

TEST_CASE("null rejection rate of partial correlation is near alpha") {
    Rng rng(2024);
    std::normal_distribution<double> normal(0.0, 1.0);
    int rejections = 0;
    const int sims = 400;
    for (int s = 0; s < sims; ++s) {
        Eigen::MatrixXd m(200, 3);
        for (int i = 0; i < 200; ++i) {
            const double c = normal(rng);
            m(i, 0) = c;
            m(i, 1) = 0.8 * c + normal(rng);
            m(i, 2) = -0.5 * c + normal(rng);
        }
        std::vector<int> r(200, 1);
        std::fill(r.begin() + 100, r.end(), 2);
        const Dataset data(m, r);
        rejections += partial_correlation_test(data, CiQuery::make(1, 2, {0})).p_value <= 0.05;
    }
    const double rate = static_cast<double>(rejections) / sims;
    CHECK(rate > 0.02);
    CHECK(rate < 0.09);
}
