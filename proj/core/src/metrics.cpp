#include "ctxcd/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace ctxcd {

std::string to_string(Scope s) { return s == Scope::IncludeR ? "include-r" : "system-only"; }

namespace {

void check_shared(const DirectedMixedGraph& pred, const DirectedMixedGraph& truth) {
    if (!pred.same_nodes(truth)) throw GraphError("metrics need graphs over the same node set");
}

bool in_scope(const DirectedMixedGraph& g, int a, int b, Scope scope) {
    return scope == Scope::IncludeR || (!g.node(a).is_context && !g.node(b).is_context);
}

std::optional<double> ratio(int num, int den) {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
}

enum class Mark { None, Tail, Arrow };

Mark mark_at(const DirectedMixedGraph& g, int u, int v) {
    const auto recs = g.records(u, v);
    if (recs.empty()) return Mark::None;
    bool all_away = true;
    for (const auto& e : recs) {
        const auto m = e.dst == v ? e.dst_mark : e.src_mark;
        if (m == EdgeMark::Arrow) return Mark::Arrow;
        if (!(e.is_directed() && e.src == v)) all_away = false;
    }
    return all_away ? Mark::Tail : Mark::None;
}

double percentile(std::vector<double> sorted, double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

SkeletonMetrics skeleton_metrics(const DirectedMixedGraph& pred, const DirectedMixedGraph& truth, Scope scope) {
    check_shared(pred, truth);
    const int n = static_cast<int>(truth.num_nodes());
    int tp = 0, fp = 0, positives = 0, negatives = 0, found = 0;
    for (int a = 0; a < n; ++a) {
        for (int b = a + 1; b < n; ++b) {
            if (!in_scope(truth, a, b, scope)) continue;
            const bool t = truth.adjacent(a, b);
            const bool p = pred.adjacent(a, b);
            positives += t;
            negatives += !t;
            found += p;
            tp += t && p;
            fp += !t && p;
        }
    }
    return {ratio(tp, positives), ratio(fp, negatives), positives, found};
}

EdgemarkMetrics edgemark_metrics(const DirectedMixedGraph& pred, const DirectedMixedGraph& truth, Scope scope) {
    check_shared(pred, truth);
    const int n = static_cast<int>(truth.num_nodes());
    int correct = 0, asserted = 0, marked = 0;
    for (int u = 0; u < n; ++u) {
        for (int v = 0; v < n; ++v) {
            if (u == v || !in_scope(truth, u, v, scope)) continue;
            if (!pred.adjacent(u, v) && !truth.adjacent(u, v)) continue;
            const auto p = mark_at(pred, u, v);
            const auto t = mark_at(truth, u, v);
            if (p != Mark::None) ++asserted;
            if (t != Mark::None) ++marked;
            if (p != Mark::None && p == t) ++correct;
        }
    }
    return {ratio(correct, asserted), ratio(correct, marked)};
}

BootstrapSummary bootstrap(std::span<const double> values, int iterations, Rng& rng) {
    if (values.empty()) throw std::invalid_argument("bootstrap needs at least one value");
    if (iterations <= 0) throw std::invalid_argument("bootstrap needs a positive iteration count");
    const auto n = values.size();
    BootstrapSummary out;
    out.iterations = iterations;
    out.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);

    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<double> means(static_cast<std::size_t>(iterations));
    for (auto& m : means) {
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) sum += values[pick(rng)];
        m = sum / static_cast<double>(n);
    }
    std::sort(means.begin(), means.end());
    out.lo = std::min(out.mean, percentile(means, 0.025));
    out.hi = std::max(out.mean, percentile(means, 0.975));
    return out;
}

std::optional<double> mean_of_present(const std::vector<std::optional<double>>& values) {
    double sum = 0.0;
    int count = 0;
    for (const auto& v : values)
        if (v) {
            sum += *v;
            ++count;
        }
    if (count == 0) return std::nullopt;
    return sum / count;
}

}  // namespace ctxcd
