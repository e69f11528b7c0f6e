#ifndef CTXCD_TESTS_SUPPORT_HPP
#define CTXCD_TESTS_SUPPORT_HPP

// Independent reference implementations used as test oracles.

#include <algorithm>
#include <functional>
#include <random>
#include <set>
#include <vector>

#include "ctxcd/graph.hpp"

namespace ctxcd::testing {

/// Random directed graph on n nodes. With `acyclic`, edges only go from lower
/// to higher index of a random permutation.
inline DirectedMixedGraph random_graph(int n, double p, bool acyclic, std::mt19937_64& rng) {
    std::vector<Node> nodes;
    for (int i = 0; i < n; ++i) nodes.push_back({"V" + std::to_string(i), false});
    DirectedMixedGraph g(nodes);
    std::vector<int> perm(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    std::bernoulli_distribution coin(p);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            if (a == b) continue;
            if (acyclic && perm[static_cast<std::size_t>(a)] > perm[static_cast<std::size_t>(b)]) continue;
            if (coin(rng)) g.add_directed(a, b);
        }
    return g;
}

/// Plain DFS reachability over directed records.
inline std::set<int> brute_ancestors(const DirectedMixedGraph& g, const std::set<int>& targets) {
    std::set<int> out;
    const int n = static_cast<int>(g.num_nodes());
    for (int u = 0; u < n; ++u) {
        std::vector<int> stack{u};
        std::set<int> seen{u};
        bool hit = false;
        while (!stack.empty() && !hit) {
            const int v = stack.back();
            stack.pop_back();
            if (targets.count(v)) hit = true;
            for (int w = 0; w < n; ++w)
                if (g.has_directed(v, w) && seen.insert(w).second) stack.push_back(w);
        }
        if (hit) out.insert(u);
    }
    return out;
}

inline bool same_cycle_class(const DirectedMixedGraph& g, int a, int b) {
    return brute_ancestors(g, {a}).count(b) && brute_ancestors(g, {b}).count(a);
}

/// Separation by enumerating every simple path and every choice of record
/// along it. A collider must be an ancestor of z; a non-collider in z blocks
/// (d-separation) or blocks when it emits a tail towards a node outside its
/// cycle class (sigma-separation).
inline bool brute_separated(const DirectedMixedGraph& g, int x, int y, const std::set<int>& z, bool sigma) {
    const auto anc_z = brute_ancestors(g, z);
    const int n = static_cast<int>(g.num_nodes());
    auto arrow_at = [](const Edge& e, int v) {
        const auto m = e.dst == v ? e.dst_mark : e.src_mark;
        return m != EdgeMark::Tail;
    };

    std::vector<int> path{x};
    std::vector<Edge> used;
    std::vector<bool> on_path(static_cast<std::size_t>(n), false);
    on_path[static_cast<std::size_t>(x)] = true;

    // Checks the interior node path[i] given the records on both sides.
    auto interior_ok = [&](std::size_t i) {
        const int v = path[i];
        const Edge& in = used[i - 1];
        const Edge& out = used[i];
        const bool collider = arrow_at(in, v) && arrow_at(out, v);
        if (collider) return anc_z.count(v) > 0;
        if (!z.count(v)) return true;
        if (!sigma) return false;
        const int u = path[i - 1];
        const int w = path[i + 1];
        if (!arrow_at(in, v) && !same_cycle_class(g, u, v)) return false;
        if (!arrow_at(out, v) && !same_cycle_class(g, v, w)) return false;
        return true;
    };

    std::function<bool()> extend = [&]() -> bool {
        const int v = path.back();
        for (int w = 0; w < n; ++w) {
            if (on_path[static_cast<std::size_t>(w)] || !g.adjacent(v, w)) continue;
            for (const auto& e : g.records(v, w)) {
                path.push_back(w);
                used.push_back(e);
                const bool ok = path.size() < 3 || interior_ok(path.size() - 2);
                if (ok) {
                    if (w == y) return true;
                    on_path[static_cast<std::size_t>(w)] = true;
                    if (extend()) return true;
                    on_path[static_cast<std::size_t>(w)] = false;
                }
                path.pop_back();
                used.pop_back();
            }
        }
        return false;
    };
    return !extend();
}

/// All subsets of `pool`.
inline std::vector<std::set<int>> power_set(const std::vector<int>& pool) {
    std::vector<std::set<int>> out;
    const std::size_t count = std::size_t{1} << pool.size();
    for (std::size_t mask = 0; mask < count; ++mask) {
        std::set<int> s;
        for (std::size_t i = 0; i < pool.size(); ++i)
            if (mask & (std::size_t{1} << i)) s.insert(pool[i]);
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace ctxcd::testing

#endif  // CTXCD_TESTS_SUPPORT_HPP
