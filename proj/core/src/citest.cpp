#include "ctxcd/citest.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <boost/math/distributions/fisher_f.hpp>

namespace ctxcd {

CiQuery CiQuery::make(int x, int y, std::vector<int> z, std::optional<int> context) {
    std::sort(z.begin(), z.end());
    z.erase(std::unique(z.begin(), z.end()), z.end());
    if (x == y) throw CiQueryError("CI query needs two distinct variables");
    if (std::binary_search(z.begin(), z.end(), x) || std::binary_search(z.begin(), z.end(), y))
        throw CiQueryError("conditioning set must not contain the tested variables");
    return {x, y, std::move(z), context};
}

std::string to_string(CiEngine e) {
    switch (e) {
        case CiEngine::Oracle: return "oracle";
        case CiEngine::PartialCorrelation: return "parcorr";
        case CiEngine::MixedContext: return "mixed";
    }
    return "parcorr";
}

std::string to_string(CitMode m) { return m == CitMode::Oracle ? "oracle" : "parcorr-mixed"; }

CitMode cit_mode_from_string(const std::string& s) {
    if (s == "oracle") return CitMode::Oracle;
    if (s == "parcorr-mixed") return CitMode::ParcorrMixed;
    throw std::invalid_argument("unknown CI test engine '" + s + "'");
}

bool CiVerdict::accepts_independence(double alpha) const {
    if (inconclusive) return false;
    if (engine == CiEngine::Oracle) return independent;
    return p_value > alpha;
}

namespace {

void check_query_shape(const CiQuery& q, int num_columns, int context_column) {
    auto valid = [&](int c) { return c >= 0 && c < num_columns; };
    if (!valid(q.x) || !valid(q.y)) throw CiQueryError("CI query refers to an unknown column");
    if (q.x == q.y) throw CiQueryError("CI query needs two distinct variables");
    for (int c : q.z) {
        if (!valid(c)) throw CiQueryError("conditioning set refers to an unknown column");
        if (c == q.x || c == q.y) throw CiQueryError("conditioning set must not contain the tested variables");
    }
    if (q.context && (q.x == context_column || q.y == context_column))
        throw CiQueryError("a context-restricted query cannot test the context indicator itself");
}

std::vector<int> without(std::vector<int> z, int column) {
    z.erase(std::remove(z.begin(), z.end(), column), z.end());
    return z;
}

std::vector<int> selected_rows(const Dataset& data, const std::optional<int>& context) {
    if (!context) {
        std::vector<int> rows(data.num_samples());
        for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = static_cast<int>(i);
        return rows;
    }
    auto rows = data.rows_with_context(*context);
    if (rows.empty()) throw CiQueryError("context " + std::to_string(*context) + " is not observed");
    return rows;
}

Eigen::VectorXd column_values(const Dataset& data, int column, const std::vector<int>& rows) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto row = static_cast<Eigen::Index>(rows[i]);
        v(static_cast<Eigen::Index>(i)) =
            data.is_context(column) ? data.context()[static_cast<std::size_t>(row)] : data.system()(row, column);
    }
    return v;
}

std::vector<int> levels_in(const Dataset& data, const std::vector<int>& rows) {
    std::set<int> levels;
    for (int r : rows) levels.insert(data.context()[static_cast<std::size_t>(r)]);
    return {levels.begin(), levels.end()};
}

/// Intercept, continuous conditioning columns, then dummy codes (all levels but
/// the first) when `with_context_dummies` is set or the context column is in z.
Eigen::MatrixXd design(const Dataset& data, const std::vector<int>& z, const std::vector<int>& rows,
                       bool with_context_dummies) {
    std::vector<Eigen::VectorXd> cols;
    cols.push_back(Eigen::VectorXd::Ones(static_cast<Eigen::Index>(rows.size())));
    bool dummies = with_context_dummies;
    for (int c : z) {
        if (data.is_context(c))
            dummies = true;
        else
            cols.push_back(column_values(data, c, rows));
    }
    if (dummies) {
        const auto levels = levels_in(data, rows);
        for (std::size_t l = 1; l < levels.size(); ++l) {
            Eigen::VectorXd d(static_cast<Eigen::Index>(rows.size()));
            for (std::size_t i = 0; i < rows.size(); ++i)
                d(static_cast<Eigen::Index>(i)) = data.context()[static_cast<std::size_t>(rows[i])] == levels[l] ? 1.0 : 0.0;
            cols.push_back(std::move(d));
        }
    }
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) m.col(static_cast<Eigen::Index>(j)) = cols[j];
    return m;
}

class LeastSquares {
public:
    explicit LeastSquares(const Eigen::MatrixXd& x) : x_(x), qr_(x) {
        qr_.setThreshold(1e-10);
        full_rank_ = qr_.rank() == x.cols();
    }

    bool full_rank() const { return full_rank_; }
    Eigen::VectorXd residuals(const Eigen::VectorXd& y) const { return y - x_ * qr_.solve(y); }

private:
    const Eigen::MatrixXd& x_;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr_;
    bool full_rank_ = false;
};

CiVerdict inconclusive(CiEngine engine, int n) {
    CiVerdict v;
    v.engine = engine;
    v.effective_n = n;
    v.inconclusive = true;
    return v;
}

double two_sided_normal_p(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

// Upper tail of F(df1, df2) for the nested-model comparison.
double nested_f_p(double rss_reduced, double rss_full, double df1, double df2) {
    if (rss_full <= 0.0) return rss_reduced > 0.0 ? 0.0 : 1.0;
    const double f = std::max(0.0, (rss_reduced - rss_full) / df1) / (rss_full / df2);
    boost::math::fisher_f dist(df1, df2);
    return boost::math::cdf(boost::math::complement(dist, f));
}

}  // namespace

CiVerdict oracle_test(const OracleContext& ctx, const CiQuery& q) {
    const auto& u = ctx.union_graph;
    const auto r_node = u.context_node();
    if (!r_node) throw CiQueryError("oracle union graph has no context indicator");
    check_query_shape(q, static_cast<int>(u.num_nodes()), *r_node);

    CiVerdict v;
    v.engine = CiEngine::Oracle;
    if (!q.context) {
        SeparationQuery sq{q.x, q.y, {q.z.begin(), q.z.end()}};
        v.independent = is_acyclic(u) ? d_separated(u, sq) : sigma_separated(u, sq);
        return v;
    }
    const auto it = ctx.descriptive_graphs.find(*q.context);
    if (it == ctx.descriptive_graphs.end())
        throw CiQueryError("oracle has no graph for context " + std::to_string(*q.context));
    const auto& g = it->second;
    if (!g.same_nodes(u)) throw CiQueryError("oracle graphs must share their node set");
    if (!is_acyclic(g))
        throw GraphError("descriptive graph of context " + std::to_string(*q.context) +
                         " is cyclic, which violates weak context-acyclicity");
    SeparationQuery sq{q.x, q.y, {q.z.begin(), q.z.end()}};
    sq.z.insert(*r_node);
    v.independent = d_separated(g, sq);
    return v;
}

CiVerdict partial_correlation_test(const Dataset& data, const CiQuery& query) {
    const int rc = data.context_column();
    check_query_shape(query, data.num_columns(), rc);
    if (query.x == rc || query.y == rc) throw CiQueryError("partial correlation needs continuous tested variables");
    const auto z = query.context ? without(query.z, rc) : query.z;
    const auto rows = selected_rows(data, query.context);
    const int n = static_cast<int>(rows.size());

    const auto x = design(data, z, rows, false);
    const int regressors = static_cast<int>(x.cols()) - 1;
    if (n < regressors + kMinimumSampleMargin) return inconclusive(CiEngine::PartialCorrelation, n);
    const LeastSquares ls(x);
    if (!ls.full_rank()) return inconclusive(CiEngine::PartialCorrelation, n);

    const auto ex = ls.residuals(column_values(data, query.x, rows));
    const auto ey = ls.residuals(column_values(data, query.y, rows));
    const double sxx = ex.squaredNorm();
    const double syy = ey.squaredNorm();
    if (!(sxx > 0.0) || !(syy > 0.0)) return inconclusive(CiEngine::PartialCorrelation, n);
    const double r = std::clamp(ex.dot(ey) / std::sqrt(sxx * syy), -1.0, 1.0);

    CiVerdict v;
    v.engine = CiEngine::PartialCorrelation;
    v.effective_n = n;
    if (std::abs(r) >= 1.0) {
        v.p_value = 0.0;
        return v;
    }
    const double stat = std::atanh(r) * std::sqrt(static_cast<double>(n - regressors - 3));
    v.p_value = two_sided_normal_p(stat);
    return v;
}

CiVerdict mixed_context_test(const Dataset& data, const CiQuery& query) {
    const int rc = data.context_column();
    check_query_shape(query, data.num_columns(), rc);
    if ((query.x == rc) == (query.y == rc))
        throw CiQueryError("mixed test needs the context indicator as exactly one tested variable");
    if (query.context) throw CiQueryError("mixed test cannot run on context-restricted rows");
    const int target = query.x == rc ? query.y : query.x;

    const auto rows = selected_rows(data, std::nullopt);
    const int n = static_cast<int>(rows.size());
    const auto levels = levels_in(data, rows);
    if (levels.size() < 2) throw CiQueryError("context indicator is constant; nothing to test");

    const auto z_size = static_cast<int>(query.z.size());
    for (int level : levels)
        if (static_cast<int>(data.count_context(level)) < z_size + 3) return inconclusive(CiEngine::MixedContext, n);

    const auto reduced = design(data, query.z, rows, false);
    const auto full = design(data, query.z, rows, true);
    const int df1 = static_cast<int>(levels.size()) - 1;
    const int df2 = n - static_cast<int>(full.cols());
    if (n < static_cast<int>(full.cols()) - 1 + kMinimumSampleMargin) return inconclusive(CiEngine::MixedContext, n);
    const LeastSquares ls_reduced(reduced);
    const LeastSquares ls_full(full);
    if (!ls_full.full_rank() || !ls_reduced.full_rank()) return inconclusive(CiEngine::MixedContext, n);

    const auto y = column_values(data, target, rows);
    const auto e_reduced = ls_reduced.residuals(y);
    const auto e_full = ls_full.residuals(y);
    const double p_mean = nested_f_p(e_reduced.squaredNorm(), e_full.squaredNorm(), df1, df2);

    const Eigen::VectorXd sq = e_full.array().square();
    const double p_dispersion =
        nested_f_p(ls_reduced.residuals(sq).squaredNorm(), ls_full.residuals(sq).squaredNorm(), df1, df2);

    CiVerdict v;
    v.engine = CiEngine::MixedContext;
    v.effective_n = n;
    v.p_value = std::min(1.0, 2.0 * std::min(p_mean, p_dispersion));
    return v;
}

// ---------------------------------------------------------------------------

void TestLog::record(const CiQuery& q, const CiVerdict& v) {
    std::lock_guard lock(mutex_);
    rows_.emplace_back(q, v);
}

std::size_t TestLog::size() const {
    std::lock_guard lock(mutex_);
    return rows_.size();
}

void TestLog::write_csv(std::ostream& out) const {
    std::lock_guard lock(mutex_);
    out << "x,y,z,context,engine,p,effective_n\n";
    for (const auto& [q, v] : rows_) {
        out << q.x << ',' << q.y << ',';
        for (std::size_t i = 0; i < q.z.size(); ++i) out << (i ? ";" : "") << q.z[i];
        out << ',';
        if (q.context) out << *q.context;
        out << ',' << to_string(v.engine) << ',';
        if (v.engine == CiEngine::Oracle)
            out << (v.independent ? 1.0 : 0.0);
        else if (!v.inconclusive)
            out << v.p_value;
        out << ',' << v.effective_n << '\n';
    }
}

CiDispatcher CiDispatcher::finite_sample(const Dataset& data) {
    CiDispatcher d;
    d.mode_ = CitMode::ParcorrMixed;
    d.data_ = &data;
    d.context_column_ = data.context_column();
    return d;
}

CiDispatcher CiDispatcher::oracle(OracleContext ctx, int context_column) {
    if (ctx.union_graph.context_node() != context_column)
        throw CiQueryError("oracle context column does not match the union graph's indicator node");
    CiDispatcher d;
    d.mode_ = CitMode::Oracle;
    d.oracle_ = std::make_shared<const OracleContext>(std::move(ctx));
    d.context_column_ = context_column;
    return d;
}

std::vector<int> CiDispatcher::contexts() const {
    if (mode_ == CitMode::ParcorrMixed) return data_->context_values();
    std::vector<int> out;
    for (const auto& [r, g] : oracle_->descriptive_graphs) out.push_back(r);
    return out;
}

CiEngine CiDispatcher::route(const CiQuery& q) const {
    if (mode_ == CitMode::Oracle) return CiEngine::Oracle;
    if (q.x == context_column_ || q.y == context_column_) return CiEngine::MixedContext;
    return CiEngine::PartialCorrelation;
}

CiVerdict CiDispatcher::test(const CiQuery& q) const {
    CiVerdict v;
    switch (route(q)) {
        case CiEngine::Oracle: v = oracle_test(*oracle_, q); break;
        case CiEngine::MixedContext: v = mixed_context_test(*data_, q); break;
        case CiEngine::PartialCorrelation: v = partial_correlation_test(*data_, q); break;
    }
    if (log_) log_->record(q, v);
    return v;
}

}  // namespace ctxcd
