#ifndef CTXCD_METRICS_HPP
#define CTXCD_METRICS_HPP

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ctxcd/graph.hpp"
#include "ctxcd/rng.hpp"

namespace ctxcd {

enum class Scope { IncludeR, SystemOnly };
std::string to_string(Scope s);

/// Rates are missing when their denominator is zero.
struct SkeletonMetrics {
    std::optional<double> tpr;
    std::optional<double> fpr;
    int true_edges = 0;
    int found_edges = 0;
};

/// Adjacency comparison over unordered pairs. FPR counts pred-only adjacencies
/// among the pairs that are non-adjacent in truth. SystemOnly ignores every
/// pair touching the context node.
SkeletonMetrics skeleton_metrics(const DirectedMixedGraph& pred, const DirectedMixedGraph& truth,
                                 Scope scope = Scope::IncludeR);

struct EdgemarkMetrics {
    std::optional<double> precision;
    std::optional<double> recall;
};

/// Per-endpoint accounting over ordered pairs adjacent in either graph. The
/// mark at v is an arrowhead if any record has one there, a tail if every
/// record is directed away from v, and no assertion otherwise.
EdgemarkMetrics edgemark_metrics(const DirectedMixedGraph& pred, const DirectedMixedGraph& truth,
                                 Scope scope = Scope::IncludeR);

struct BootstrapSummary {
    double mean = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    int iterations = 0;
};

/// Percentile bootstrap (2.5 / 97.5) of the mean.
BootstrapSummary bootstrap(std::span<const double> values, int iterations, Rng& rng);

/// Arithmetic mean of the present values; missing when none are present.
std::optional<double> mean_of_present(const std::vector<std::optional<double>>& values);

}  // namespace ctxcd

#endif  // CTXCD_METRICS_HPP
