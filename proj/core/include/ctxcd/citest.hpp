#ifndef CTXCD_CITEST_HPP
#define CTXCD_CITEST_HPP

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ctxcd/dataset.hpp"
#include "ctxcd/graph.hpp"

namespace ctxcd {

class CiQueryError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// X independent of Y given Z, optionally restricted to rows with R = context.
struct CiQuery {
    int x = 0;
    int y = 0;
    std::vector<int> z;  // sorted, duplicate-free
    std::optional<int> context;

    static CiQuery make(int x, int y, std::vector<int> z, std::optional<int> context = std::nullopt);
    auto operator<=>(const CiQuery&) const = default;
};

enum class CiEngine { Oracle, PartialCorrelation, MixedContext };
std::string to_string(CiEngine e);

struct CiVerdict {
    CiEngine engine = CiEngine::PartialCorrelation;
    double p_value = 1.0;      // finite-sample engines
    bool independent = false;  // oracle engine
    int effective_n = 0;
    bool inconclusive = false;

    /// Affirmative independence at level alpha. Inconclusive never counts.
    bool accepts_independence(double alpha) const;
};

/// Minimum of (samples - conditioning regressors) for a conclusive test.
inline constexpr int kMinimumSampleMargin = 10;

struct OracleContext {
    std::map<int, DirectedMixedGraph> descriptive_graphs;
    DirectedMixedGraph union_graph;
};

/// Pooled query: sigma-separation in the union graph. Context query: d-separation
/// in the descriptive graph of that context with R added to the conditioning set.
CiVerdict oracle_test(const OracleContext& ctx, const CiQuery& q);

/// Fisher-z test of the sample partial correlation. A categorical context
/// column in z enters the regression as dummy codes.
CiVerdict partial_correlation_test(const Dataset& data, const CiQuery& q);

/// Continuous variable versus R given continuous z: F-test for a mean shift
/// across R's groups and F-test for a dispersion shift on squared residuals,
/// combined by Bonferroni.
CiVerdict mixed_context_test(const Dataset& data, const CiQuery& q);

enum class CitMode { Oracle, ParcorrMixed };
std::string to_string(CitMode m);
CitMode cit_mode_from_string(const std::string& s);

/// One row per executed test: x, y, z, context, engine, p, effective_n.
class TestLog {
public:
    void record(const CiQuery& q, const CiVerdict& v);
    void write_csv(std::ostream& out) const;
    std::size_t size() const;

private:
    mutable std::mutex mutex_;
    std::vector<std::pair<CiQuery, CiVerdict>> rows_;
};

/// Routes queries to the configured engines. Thread-safe for concurrent use.
class CiDispatcher {
public:
    static CiDispatcher finite_sample(const Dataset& data);
    static CiDispatcher oracle(OracleContext ctx, int context_column);

    CitMode mode() const { return mode_; }
    /// Column id of R (graph node index).
    int context_column() const { return context_column_; }
    int num_system() const { return context_column_; }
    /// Sorted context values that can be queried.
    std::vector<int> contexts() const;
    CiEngine route(const CiQuery& q) const;
    CiVerdict test(const CiQuery& q) const;

    void set_log(std::shared_ptr<TestLog> log) { log_ = std::move(log); }

private:
    CiDispatcher() = default;

    CitMode mode_ = CitMode::ParcorrMixed;
    const Dataset* data_ = nullptr;
    std::shared_ptr<const OracleContext> oracle_;
    int context_column_ = -1;
    std::shared_ptr<TestLog> log_;
};

}  // namespace ctxcd

#endif  // CTXCD_CITEST_HPP
