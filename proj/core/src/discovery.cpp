#include "ctxcd/discovery.hpp"

#include <algorithm>
#include <ostream>

namespace ctxcd {

std::string to_string(LinkMode m) {
    switch (m) {
        case LinkMode::None: return "none";
        case LinkMode::RChildren: return "r-children";
        case LinkMode::RAll: return "r-all";
    }
    return "none";
}

LinkMode link_mode_from_string(const std::string& s) {
    if (s == "none") return LinkMode::None;
    if (s == "r-children") return LinkMode::RChildren;
    if (s == "r-all") return LinkMode::RAll;
    throw std::invalid_argument("unknown link assumption mode '" + s + "'");
}

std::string to_string(Method m) {
    switch (m) {
        case Method::AC: return "ac";
        case Method::Masked: return "masked";
        case Method::Pooled: return "pooled";
        case Method::Baseline: return "baseline";
    }
    return "ac";
}

Method method_from_string(const std::string& s) {
    if (s == "ac") return Method::AC;
    if (s == "masked") return Method::Masked;
    if (s == "pooled") return Method::Pooled;
    if (s == "baseline") return Method::Baseline;
    throw std::invalid_argument("unknown discovery method '" + s + "'");
}

LinkAssumptions LinkAssumptions::from_graph(LinkMode mode, const DirectedMixedGraph& truth) {
    LinkAssumptions out;
    out.mode = mode;
    if (mode == LinkMode::None) return out;
    const auto r = truth.context_node();
    if (!r) throw DiscoveryError("link assumptions need a graph with a context node");
    for (int c : truth.children(*r)) out.fixed_edges.emplace(*r, c);
    if (mode == LinkMode::RAll)
        for (int p : truth.parents(*r)) out.fixed_edges.emplace(p, *r);
    return out;
}

void LinkAssumptions::validate(int context_node) const {
    for (const auto& [a, b] : fixed_edges)
        if ((a == context_node) == (b == context_node))
            throw DiscoveryError("fixed edges must have the context node on exactly one end");
    if (mode == LinkMode::None && !fixed_edges.empty())
        throw DiscoveryError("link mode 'none' cannot carry fixed edges");
}

// ---------------------------------------------------------------------------

namespace {

/// Calls visit(subset) for every size-k subset of `pool` in lexicographic
/// order; stops early when visit returns true.
template <typename Visit>
bool for_each_subset(const std::vector<int>& pool, int k, Visit&& visit) {
    const int n = static_cast<int>(pool.size());
    if (k > n) return false;
    std::vector<int> idx(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) idx[static_cast<std::size_t>(i)] = i;
    std::vector<int> subset(static_cast<std::size_t>(k));
    while (true) {
        for (int i = 0; i < k; ++i) subset[static_cast<std::size_t>(i)] = pool[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
        if (visit(subset)) return true;
        int i = k - 1;
        while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - k + i) --i;
        if (i < 0) return false;
        ++idx[static_cast<std::size_t>(i)];
        for (int t = i + 1; t < k; ++t) idx[static_cast<std::size_t>(t)] = idx[static_cast<std::size_t>(t - 1)] + 1;
    }
}

}  // namespace

SkeletonResult pc_stable_skeleton(int num_nodes, const std::vector<int>& active, const SkeletonTest& test,
                                  const SkeletonOptions& opts) {
    std::vector<std::set<int>> adj(static_cast<std::size_t>(num_nodes));
    SkeletonResult out;
    for (int a : active)
        for (int b : active)
            if (a != b) adj[static_cast<std::size_t>(a)].insert(b);
    for (const auto& [a, b] : opts.forbidden) {
        if (adj[static_cast<std::size_t>(a)].erase(b) == 0) continue;
        adj[static_cast<std::size_t>(b)].erase(a);
        out.sepsets[{a, b}] = Sepset{{}, std::nullopt, true};
    }

    std::vector<int> order = active;
    std::sort(order.begin(), order.end());
    for (int level = 0; !opts.max_sepset_size || level <= *opts.max_sepset_size; ++level) {
        const auto frozen = adj;
        if (opts.record_trace) out.frozen.push_back(frozen);
        bool any_candidate = false;
        for (int j : order) {
            for (int i : frozen[static_cast<std::size_t>(j)]) {
                const auto key = make_pair_key(i, j);
                if (!adj[static_cast<std::size_t>(j)].count(i) || opts.fixed.count(key)) continue;
                std::vector<int> pool;
                for (int v : frozen[static_cast<std::size_t>(j)])
                    if (v != i) pool.push_back(v);
                if (static_cast<int>(pool.size()) < level) continue;
                any_candidate = true;
                for_each_subset(pool, level, [&](const std::vector<int>& s) {
                    const auto verdict = test(i, j, s);
                    if (!verdict.independent) return false;
                    adj[static_cast<std::size_t>(i)].erase(j);
                    adj[static_cast<std::size_t>(j)].erase(i);
                    out.sepsets[key] = Sepset{s, verdict.context, false};
                    out.removal_level[key] = level;
                    return true;
                });
            }
        }
        if (!any_candidate) break;
    }
    for (int a : order)
        for (int b : adj[static_cast<std::size_t>(a)])
            if (a < b) out.adjacencies.emplace(a, b);
    return out;
}

// ---------------------------------------------------------------------------
// Orientation

namespace {

class MarkTable {
public:
    MarkTable(int n, const std::set<NodePair>& skeleton, const SepsetMap& sepsets)
        : n_(n), adj_(sq(n), false), arrow_(sq(n), false), fixed_tail_(sq(n), false), sepsets_(sepsets) {
        for (const auto& [a, b] : skeleton) adj_[at(a, b)] = adj_[at(b, a)] = true;
    }

    int size() const { return n_; }
    bool adjacent(int a, int b) const { return adj_[at(a, b)]; }
    bool undirected(int a, int b) const { return adjacent(a, b) && !arrow_[at(a, b)] && !arrow_[at(b, a)]; }
    /// Strictly a -> b.
    bool directed(int a, int b) const { return adjacent(a, b) && arrow_[at(a, b)] && !arrow_[at(b, a)]; }
    bool arrow_at(int a, int b) const { return arrow_[at(a, b)]; }

    /// Non-adjacency established by a test (not by assumption).
    bool tested_nonadjacent(int a, int b) const {
        if (adjacent(a, b) || a == b) return false;
        const auto it = sepsets_.find(make_pair_key(a, b));
        return it != sepsets_.end() && !it->second.assumed;
    }
    const Sepset* sepset(int a, int b) const {
        const auto it = sepsets_.find(make_pair_key(a, b));
        return it == sepsets_.end() ? nullptr : &it->second;
    }

    void fix(int from, int to) {
        if (!adjacent(from, to)) return;
        arrow_[at(from, to)] = true;
        arrow_[at(to, from)] = false;
        fixed_tail_[at(to, from)] = true;
    }
    /// Arrowhead at b on edge a-b. Returns true on change.
    bool put_arrow(int a, int b) {
        if (arrow_[at(a, b)] || fixed_tail_[at(a, b)]) return false;
        arrow_[at(a, b)] = true;
        return true;
    }

private:
    static std::size_t sq(int n) { return static_cast<std::size_t>(n) * static_cast<std::size_t>(n); }
    std::size_t at(int a, int b) const { return static_cast<std::size_t>(a) * static_cast<std::size_t>(n_) + static_cast<std::size_t>(b); }

    int n_;
    std::vector<bool> adj_;
    std::vector<bool> arrow_;       // arrow_[a][b]: arrowhead at b on a-b
    std::vector<bool> fixed_tail_;  // fixed_tail_[a][b]: tail at b is known
    const SepsetMap& sepsets_;
};

bool meek_pass(MarkTable& m) {
    const int n = m.size();
    bool changed = false;
    for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
            if (a == b || !m.undirected(a, b)) continue;
            bool orient = false;
            for (int c = 0; c < n && !orient; ++c) {
                if (c == a || c == b) continue;
                // R1: c -> a - b, c and b separated.
                if (m.directed(c, a) && m.tested_nonadjacent(c, b)) orient = true;
                // R2: a -> c -> b with a - b.
                if (m.directed(a, c) && m.directed(c, b)) orient = true;
            }
            for (int c = 0; c < n && !orient; ++c) {
                if (c == a || c == b || !m.undirected(a, c)) continue;
                for (int d = c + 1; d < n && !orient; ++d) {
                    if (d == a || d == b) continue;
                    // R3: a - c -> b, a - d -> b, c and d separated.
                    if (m.undirected(a, d) && m.directed(c, b) && m.directed(d, b) && m.tested_nonadjacent(c, d))
                        orient = true;
                }
                for (int d = 0; d < n && !orient; ++d) {
                    if (d == a || d == b || d == c) continue;
                    // R4: a - c -> d -> b, a adjacent to d, c and b separated.
                    if (m.directed(c, d) && m.directed(d, b) && m.adjacent(a, d) && m.tested_nonadjacent(c, b))
                        orient = true;
                }
            }
            if (orient) changed |= m.put_arrow(a, b);
        }
    }
    return changed;
}

}  // namespace

DirectedMixedGraph orient(const DirectedMixedGraph& nodes_only, const std::set<NodePair>& skeleton,
                          const SepsetMap& sepsets, const std::set<std::pair<int, int>>& fixed_edges) {
    const int n = static_cast<int>(nodes_only.num_nodes());
    MarkTable m(n, skeleton, sepsets);
    for (const auto& [from, to] : fixed_edges) m.fix(from, to);

    for (int k = 0; k < n; ++k) {
        for (int i = 0; i < n; ++i) {
            if (i == k || !m.adjacent(i, k)) continue;
            for (int j = i + 1; j < n; ++j) {
                if (j == k || !m.adjacent(j, k) || !m.tested_nonadjacent(i, j)) continue;
                const auto& s = m.sepset(i, j)->set;
                if (std::find(s.begin(), s.end(), k) != s.end()) continue;
                m.put_arrow(i, k);
                m.put_arrow(j, k);
            }
        }
    }
    while (meek_pass(m)) {
    }

    DirectedMixedGraph out(nodes_only.nodes());
    for (const auto& [a, b] : skeleton) {
        const bool head_b = m.arrow_at(a, b);
        const bool head_a = m.arrow_at(b, a);
        if (head_b) out.add_directed(a, b);
        if (head_a) out.add_directed(b, a);
        if (!head_a && !head_b) out.add_undirected(a, b);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Strategies

namespace {

/// Executes queries once per method run; repeated queries reuse the verdict.
class CountingTester {
public:
    CountingTester(const CiDispatcher& cit, double alpha) : cit_(cit), alpha_(alpha) {}

    bool independent(int i, int j, std::vector<int> s, std::optional<int> context) {
        auto q = CiQuery::make(std::min(i, j), std::max(i, j), std::move(s), context);
        const auto it = memo_.find(q);
        if (it != memo_.end()) return it->second;
        const bool verdict = cit_.test(q).accepts_independence(alpha_);
        memo_.emplace(std::move(q), verdict);
        return verdict;
    }
    long count() const { return static_cast<long>(memo_.size()); }

private:
    const CiDispatcher& cit_;
    double alpha_;
    std::map<CiQuery, bool> memo_;
};

struct Setup {
    int d = 0;  // system variables; R is node d
    std::vector<int> contexts;
    DirectedMixedGraph nodes;
    SkeletonOptions opts;  // link assumptions over all nodes
};

Setup prepare(const CiDispatcher& cit, const DiscoveryConfig& cfg, bool needs_contexts) {
    if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw DiscoveryError("alpha must lie in (0, 1)");
    if (cfg.max_sepset_size && *cfg.max_sepset_size < 0) throw DiscoveryError("max_sepset_size must be nonnegative");
    Setup s;
    s.d = cit.num_system();
    s.contexts = cit.contexts();
    if (needs_contexts && s.contexts.size() < 2)
        throw DiscoveryError("context-specific discovery needs at least two observed contexts");
    s.nodes = DirectedMixedGraph::with_system_nodes(static_cast<std::size_t>(s.d), true);
    cfg.links.validate(s.d);
    s.opts.max_sepset_size = cfg.max_sepset_size;
    std::set<int> r_adjacent;
    for (const auto& [a, b] : cfg.links.fixed_edges) {
        s.opts.fixed.insert(make_pair_key(a, b));
        r_adjacent.insert(a == s.d ? b : a);
    }
    if (cfg.links.mode == LinkMode::RAll)
        for (int v = 0; v < s.d; ++v)
            if (!r_adjacent.count(v)) s.opts.forbidden.insert(make_pair_key(v, s.d));
    return s;
}

std::vector<int> all_nodes(int count) {
    std::vector<int> v(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) v[static_cast<std::size_t>(i)] = i;
    return v;
}

void finish_union(DiscoveryResult& res) {
    std::vector<DirectedMixedGraph> graphs;
    for (const auto& [r, g] : res.context_graphs) graphs.push_back(g);
    res.union_graph = union_of_graphs(graphs);
    res.labeled_union = labeled_union(res.context_graphs);
}

SkeletonResult pooled_skeleton(const Setup& s, CountingTester& tester) {
    auto test = [&](int i, int j, const std::vector<int>& z) {
        return TestOutcome{tester.independent(i, j, z, std::nullopt), std::nullopt};
    };
    return pc_stable_skeleton(s.d + 1, all_nodes(s.d + 1), test, s.opts);
}

SkeletonResult masked_skeleton(const Setup& s, CountingTester& tester, int r) {
    auto test = [&](int i, int j, const std::vector<int>& z) {
        return TestOutcome{tester.independent(i, j, z, r), r};
    };
    SkeletonOptions opts;
    opts.max_sepset_size = s.opts.max_sepset_size;
    return pc_stable_skeleton(s.d + 1, all_nodes(s.d), test, opts);
}

}  // namespace

DiscoveryResult pc_ac(const CiDispatcher& cit, const DiscoveryConfig& cfg) {
    const auto s = prepare(cit, cfg, true);
    CountingTester tester(cit, cfg.alpha);
    DiscoveryResult res;
    res.method = Method::AC;
    for (int r : s.contexts) {
        auto test = [&](int i, int j, const std::vector<int>& z) {
            if (std::find(z.begin(), z.end(), s.d) == z.end())
                return TestOutcome{tester.independent(i, j, z, std::nullopt), std::nullopt};
            std::vector<int> rest;
            for (int v : z)
                if (v != s.d) rest.push_back(v);
            return TestOutcome{tester.independent(i, j, rest, r), r};
        };
        auto sk = pc_stable_skeleton(s.d + 1, all_nodes(s.d + 1), test, s.opts);
        res.context_graphs.emplace(r, orient(s.nodes, sk.adjacencies, sk.sepsets, cfg.links.fixed_edges));
        res.sepsets.emplace(r, std::move(sk.sepsets));
    }
    finish_union(res);
    res.test_count = tester.count();
    return res;
}

DiscoveryResult pc_masked(const CiDispatcher& cit, const DiscoveryConfig& cfg) {
    const auto s = prepare(cit, cfg, true);
    CountingTester tester(cit, cfg.alpha);
    DiscoveryResult res;
    res.method = Method::Masked;
    for (int r : s.contexts) {
        auto sk = masked_skeleton(s, tester, r);
        res.context_graphs.emplace(r, orient(s.nodes, sk.adjacencies, sk.sepsets));
        res.sepsets.emplace(r, std::move(sk.sepsets));
    }
    finish_union(res);
    res.test_count = tester.count();
    return res;
}

DiscoveryResult pc_pooled(const CiDispatcher& cit, const DiscoveryConfig& cfg) {
    const auto s = prepare(cit, cfg, false);
    CountingTester tester(cit, cfg.alpha);
    DiscoveryResult res;
    res.method = Method::Pooled;
    auto sk = pooled_skeleton(s, tester);
    res.union_graph = orient(s.nodes, sk.adjacencies, sk.sepsets, cfg.links.fixed_edges);
    res.labeled_union = res.union_graph;
    res.sepsets.emplace(std::nullopt, std::move(sk.sepsets));
    res.test_count = tester.count();
    return res;
}

DiscoveryResult pc_baseline(const CiDispatcher& cit, const DiscoveryConfig& cfg) {
    const auto s = prepare(cit, cfg, true);
    CountingTester tester(cit, cfg.alpha);
    DiscoveryResult res;
    res.method = Method::Baseline;
    const auto pooled = pooled_skeleton(s, tester);
    for (int r : s.contexts) {
        const auto masked = masked_skeleton(s, tester, r);
        std::set<NodePair> skeleton;
        for (const auto& p : pooled.adjacencies)
            if (p.second == s.d || masked.adjacencies.count(p)) skeleton.insert(p);
        SepsetMap seps = pooled.sepsets;
        for (const auto& [p, sep] : masked.sepsets)
            if (!seps.count(p)) seps.emplace(p, sep);
        res.context_graphs.emplace(r, orient(s.nodes, skeleton, seps, cfg.links.fixed_edges));
        res.sepsets.emplace(r, std::move(seps));
    }
    finish_union(res);
    res.test_count = tester.count();
    return res;
}

DiscoveryResult discover(const CiDispatcher& cit, const DiscoveryConfig& cfg) {
    switch (cfg.method) {
        case Method::AC: return pc_ac(cit, cfg);
        case Method::Masked: return pc_masked(cit, cfg);
        case Method::Pooled: return pc_pooled(cit, cfg);
        case Method::Baseline: return pc_baseline(cit, cfg);
    }
    return pc_ac(cit, cfg);
}

void write_sepsets_csv(std::ostream& out, const DiscoveryResult& result) {
    out << "run,x,y,sepset,context,assumed\n";
    for (const auto& [run, seps] : result.sepsets) {
        for (const auto& [pair, sep] : seps) {
            out << (run ? std::to_string(*run) : "pooled") << ',' << pair.first << ',' << pair.second << ',';
            for (std::size_t i = 0; i < sep.set.size(); ++i) out << (i ? ";" : "") << sep.set[i];
            out << ',' << (sep.context ? std::to_string(*sep.context) : "pooled") << ',' << (sep.assumed ? 1 : 0)
                << '\n';
        }
    }
}

}  // namespace ctxcd
