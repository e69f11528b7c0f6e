#include "ctxcd/graph.hpp"

#include <algorithm>
#include <array>
#include <deque>
#include <numeric>

namespace ctxcd {

std::string_view to_string(EdgeMark m) {
    switch (m) {
        case EdgeMark::Tail: return "tail";
        case EdgeMark::Arrow: return "arrow";
        case EdgeMark::Undirected: return "undirected";
    }
    return "tail";
}

EdgeMark edge_mark_from_string(std::string_view s) {
    if (s == "tail") return EdgeMark::Tail;
    if (s == "arrow") return EdgeMark::Arrow;
    if (s == "undirected") return EdgeMark::Undirected;
    throw GraphError("unknown edge mark '" + std::string(s) + "'");
}

DirectedMixedGraph::DirectedMixedGraph(std::vector<Node> nodes)
    : nodes_(std::move(nodes)), adjacency_(nodes_.size()) {
    int contexts = 0;
    for (const auto& n : nodes_) contexts += n.is_context ? 1 : 0;
    if (contexts > 1) throw GraphError("at most one node may be the context indicator");
}

DirectedMixedGraph DirectedMixedGraph::with_system_nodes(std::size_t d, bool with_context) {
    std::vector<Node> nodes;
    nodes.reserve(d + 1);
    for (std::size_t i = 0; i < d; ++i) nodes.push_back({"X" + std::to_string(i + 1), false});
    if (with_context) nodes.push_back({"R", true});
    return DirectedMixedGraph(std::move(nodes));
}

int DirectedMixedGraph::add_node(std::string name, bool is_context) {
    if (is_context && context_node()) throw GraphError("graph already has a context indicator");
    nodes_.push_back({std::move(name), is_context});
    adjacency_.emplace_back();
    return static_cast<int>(nodes_.size()) - 1;
}

const Node& DirectedMixedGraph::node(int v) const {
    check_node(v);
    return nodes_[static_cast<std::size_t>(v)];
}

std::optional<int> DirectedMixedGraph::context_node() const {
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (nodes_[i].is_context) return static_cast<int>(i);
    return std::nullopt;
}

std::optional<int> DirectedMixedGraph::find_node(std::string_view name) const {
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (nodes_[i].name == name) return static_cast<int>(i);
    return std::nullopt;
}

void DirectedMixedGraph::check_node(int v) const {
    if (!contains(v)) throw GraphError("unknown node index " + std::to_string(v));
}

DirectedMixedGraph::Slot* DirectedMixedGraph::slot(int a, int b) {
    auto it = slots_.find(make_pair_key(a, b));
    return it == slots_.end() ? nullptr : &it->second;
}

const DirectedMixedGraph::Slot* DirectedMixedGraph::slot(int a, int b) const {
    auto it = slots_.find(make_pair_key(a, b));
    return it == slots_.end() ? nullptr : &it->second;
}

void DirectedMixedGraph::add_edge(Edge e) {
    check_node(e.src);
    check_node(e.dst);
    if (e.src == e.dst) throw GraphError("self-loops are not allowed");
    const bool src_u = e.src_mark == EdgeMark::Undirected;
    const bool dst_u = e.dst_mark == EdgeMark::Undirected;
    if (src_u != dst_u) throw GraphError("undirected marks must appear on both endpoints");
    if (e.src_mark == EdgeMark::Arrow && e.dst_mark == EdgeMark::Tail) {
        std::swap(e.src, e.dst);
        std::swap(e.src_mark, e.dst_mark);
    }
    const bool symmetric = e.src_mark == e.dst_mark;
    if (symmetric && e.src > e.dst) std::swap(e.src, e.dst);

    const auto [a, b] = make_pair_key(e.src, e.dst);
    auto& s = slots_[{a, b}];
    if (symmetric) {
        s.high_low.reset();
        s.low_high = std::move(e);
    } else {
        if (s.low_high && s.low_high->src_mark == s.low_high->dst_mark) s.low_high.reset();
        if (e.src < e.dst)
            s.low_high = std::move(e);
        else
            s.high_low = std::move(e);
    }
    adjacency_[static_cast<std::size_t>(a)].insert(b);
    adjacency_[static_cast<std::size_t>(b)].insert(a);
}

void DirectedMixedGraph::add_directed(int from, int to, std::set<int> labels) {
    add_edge({from, to, EdgeMark::Tail, EdgeMark::Arrow, std::move(labels)});
}

void DirectedMixedGraph::add_undirected(int a, int b) {
    add_edge({a, b, EdgeMark::Undirected, EdgeMark::Undirected, {}});
}

void DirectedMixedGraph::remove_directed(int from, int to) {
    check_node(from);
    check_node(to);
    auto* s = slot(from, to);
    if (s == nullptr) return;
    auto& rec = from < to ? s->low_high : s->high_low;
    if (rec && rec->is_directed() && rec->src == from) rec.reset();
    if (!s->low_high && !s->high_low) remove_adjacency(from, to);
}

void DirectedMixedGraph::remove_adjacency(int a, int b) {
    check_node(a);
    check_node(b);
    slots_.erase(make_pair_key(a, b));
    adjacency_[static_cast<std::size_t>(a)].erase(b);
    adjacency_[static_cast<std::size_t>(b)].erase(a);
}

bool DirectedMixedGraph::adjacent(int a, int b) const {
    check_node(a);
    check_node(b);
    return slot(a, b) != nullptr;
}

bool DirectedMixedGraph::has_directed(int from, int to) const {
    check_node(from);
    check_node(to);
    const auto* s = slot(from, to);
    if (s == nullptr) return false;
    const auto& rec = from < to ? s->low_high : s->high_low;
    return rec && rec->is_directed() && rec->src == from;
}

bool DirectedMixedGraph::has_undirected(int a, int b) const {
    const auto* s = slot(a, b);
    return s != nullptr && s->low_high && s->low_high->src_mark == EdgeMark::Undirected;
}

std::vector<Edge> DirectedMixedGraph::records(int a, int b) const {
    std::vector<Edge> out;
    if (const auto* s = slot(a, b)) {
        if (s->low_high) out.push_back(*s->low_high);
        if (s->high_low) out.push_back(*s->high_low);
    }
    return out;
}

std::vector<int> DirectedMixedGraph::neighbors(int v) const {
    check_node(v);
    const auto& a = adjacency_[static_cast<std::size_t>(v)];
    return {a.begin(), a.end()};
}

std::vector<int> DirectedMixedGraph::parents(int v) const {
    std::vector<int> out;
    for (int u : neighbors(v))
        if (has_directed(u, v)) out.push_back(u);
    return out;
}

std::vector<int> DirectedMixedGraph::children(int v) const {
    std::vector<int> out;
    for (int u : neighbors(v))
        if (has_directed(v, u)) out.push_back(u);
    return out;
}

std::vector<Edge> DirectedMixedGraph::edges() const {
    std::vector<Edge> out;
    for (const auto& [key, s] : slots_) {
        if (s.low_high) out.push_back(*s.low_high);
        if (s.high_low) out.push_back(*s.high_low);
    }
    return out;
}

std::size_t DirectedMixedGraph::num_records() const {
    std::size_t n = 0;
    for (const auto& [key, s] : slots_) n += (s.low_high ? 1 : 0) + (s.high_low ? 1 : 0);
    return n;
}

std::set<NodePair> DirectedMixedGraph::skeleton() const {
    std::set<NodePair> out;
    for (const auto& [key, s] : slots_) out.insert(key);
    return out;
}

bool DirectedMixedGraph::operator==(const DirectedMixedGraph& other) const {
    return nodes_ == other.nodes_ && edges() == other.edges();
}

// ---------------------------------------------------------------------------

std::set<int> ancestors(const DirectedMixedGraph& g, const std::set<int>& vs) {
    std::set<int> seen;
    std::deque<int> queue;
    for (int v : vs) {
        if (!g.contains(v)) throw GraphError("unknown node index " + std::to_string(v));
        if (seen.insert(v).second) queue.push_back(v);
    }
    while (!queue.empty()) {
        const int v = queue.front();
        queue.pop_front();
        for (int u : g.parents(v))
            if (seen.insert(u).second) queue.push_back(u);
    }
    return seen;
}

std::set<int> ancestors(const DirectedMixedGraph& g, int v) { return ancestors(g, std::set<int>{v}); }

std::set<int> descendants(const DirectedMixedGraph& g, int v) {
    if (!g.contains(v)) throw GraphError("unknown node index " + std::to_string(v));
    std::set<int> seen{v};
    std::deque<int> queue{v};
    while (!queue.empty()) {
        const int u = queue.front();
        queue.pop_front();
        for (int w : g.children(u))
            if (seen.insert(w).second) queue.push_back(w);
    }
    return seen;
}

std::vector<std::vector<int>> strongly_connected_components(const DirectedMixedGraph& g) {
    const int n = static_cast<int>(g.num_nodes());
    std::vector<std::vector<int>> succ(static_cast<std::size_t>(n));
    for (int v = 0; v < n; ++v) succ[static_cast<std::size_t>(v)] = g.children(v);

    // Tarjan with an explicit stack of (node, next child position).
    std::vector<int> index(static_cast<std::size_t>(n), -1), low(static_cast<std::size_t>(n), 0);
    std::vector<bool> on_stack(static_cast<std::size_t>(n), false);
    std::vector<int> stack;
    std::vector<std::vector<int>> comps;
    int counter = 0;

    for (int root = 0; root < n; ++root) {
        if (index[static_cast<std::size_t>(root)] >= 0) continue;
        std::vector<std::pair<int, std::size_t>> call{{root, 0}};
        index[static_cast<std::size_t>(root)] = low[static_cast<std::size_t>(root)] = counter++;
        stack.push_back(root);
        on_stack[static_cast<std::size_t>(root)] = true;
        while (!call.empty()) {
            auto& [v, pos] = call.back();
            const auto& out = succ[static_cast<std::size_t>(v)];
            if (pos < out.size()) {
                const int w = out[pos++];
                const auto wi = static_cast<std::size_t>(w);
                if (index[wi] < 0) {
                    index[wi] = low[wi] = counter++;
                    stack.push_back(w);
                    on_stack[wi] = true;
                    call.emplace_back(w, 0);
                } else if (on_stack[wi]) {
                    low[static_cast<std::size_t>(v)] = std::min(low[static_cast<std::size_t>(v)], index[wi]);
                }
                continue;
            }
            const int done = v;
            call.pop_back();
            if (!call.empty()) {
                const int parent = call.back().first;
                low[static_cast<std::size_t>(parent)] =
                    std::min(low[static_cast<std::size_t>(parent)], low[static_cast<std::size_t>(done)]);
            }
            if (low[static_cast<std::size_t>(done)] == index[static_cast<std::size_t>(done)]) {
                std::vector<int> comp;
                int w = -1;
                do {
                    w = stack.back();
                    stack.pop_back();
                    on_stack[static_cast<std::size_t>(w)] = false;
                    comp.push_back(w);
                } while (w != done);
                std::sort(comp.begin(), comp.end());
                comps.push_back(std::move(comp));
            }
        }
    }
    std::sort(comps.begin(), comps.end(), [](const auto& a, const auto& b) { return a.front() < b.front(); });
    return comps;
}

bool is_acyclic(const DirectedMixedGraph& g) {
    for (const auto& c : strongly_connected_components(g))
        if (c.size() > 1) return false;
    return true;
}

namespace {

std::vector<int> component_ids(const DirectedMixedGraph& g) {
    std::vector<int> id(g.num_nodes(), 0);
    int next = 0;
    for (const auto& c : strongly_connected_components(g)) {
        for (int v : c) id[static_cast<std::size_t>(v)] = next;
        ++next;
    }
    return id;
}

void validate(const DirectedMixedGraph& g, const SeparationQuery& q) {
    if (!g.contains(q.x) || !g.contains(q.y)) throw GraphError("separation query refers to an unknown node");
    if (q.x == q.y) throw GraphError("separation query needs two distinct nodes");
    for (int v : q.z) {
        if (!g.contains(v)) throw GraphError("conditioning set refers to an unknown node");
        if (v == q.x || v == q.y) throw GraphError("conditioning set must not contain the queried nodes");
    }
}

struct Incidence {
    int other;
    EdgeMark at_self;
    EdgeMark at_other;
};

EdgeMark as_separation_mark(EdgeMark m) { return m == EdgeMark::Undirected ? EdgeMark::Arrow : m; }

std::vector<std::vector<Incidence>> incidence_lists(const DirectedMixedGraph& g) {
    std::vector<std::vector<Incidence>> inc(g.num_nodes());
    for (const auto& e : g.edges()) {
        const auto sm = as_separation_mark(e.src_mark);
        const auto dm = as_separation_mark(e.dst_mark);
        inc[static_cast<std::size_t>(e.src)].push_back({e.dst, sm, dm});
        inc[static_cast<std::size_t>(e.dst)].push_back({e.src, dm, sm});
    }
    return inc;
}

// Arrival state at a node on a walk.
enum Arrival : int { kStart = 0, kArrow = 1, kTailSameComponent = 2, kTailOtherComponent = 3 };

bool separated_by_walks(const DirectedMixedGraph& g, const SeparationQuery& q, const std::vector<int>& comp) {
    const auto anc_z = ancestors(g, q.z);
    const auto inc = incidence_lists(g);
    std::vector<std::array<bool, 4>> visited(g.num_nodes(), {false, false, false, false});
    std::deque<std::pair<int, int>> queue{{q.x, kStart}};
    visited[static_cast<std::size_t>(q.x)][kStart] = true;

    while (!queue.empty()) {
        const auto [v, arrival] = queue.front();
        queue.pop_front();
        const bool in_z = q.z.count(v) > 0;
        const auto cv = comp[static_cast<std::size_t>(v)];
        for (const auto& e : inc[static_cast<std::size_t>(v)]) {
            const auto cw = comp[static_cast<std::size_t>(e.other)];
            if (arrival != kStart) {
                const bool collider = arrival == kArrow && e.at_self == EdgeMark::Arrow;
                if (collider) {
                    if (anc_z.count(v) == 0) continue;
                } else if (in_z) {
                    if (arrival == kTailOtherComponent) continue;
                    if (e.at_self == EdgeMark::Tail && cw != cv) continue;
                }
            }
            if (e.other == q.y) return false;
            int next = kArrow;
            if (e.at_other != EdgeMark::Arrow) next = cw == cv ? kTailSameComponent : kTailOtherComponent;
            auto& seen = visited[static_cast<std::size_t>(e.other)][static_cast<std::size_t>(next)];
            if (!seen) {
                seen = true;
                queue.emplace_back(e.other, next);
            }
        }
    }
    return true;
}

}  // namespace

bool d_separated(const DirectedMixedGraph& g, const SeparationQuery& q) {
    validate(g, q);
    if (!is_acyclic(g)) throw GraphError("d-separation needs an acyclic graph; use sigma_separated for cyclic graphs");
    std::vector<int> singleton(g.num_nodes());
    std::iota(singleton.begin(), singleton.end(), 0);
    return separated_by_walks(g, q, singleton);
}

bool sigma_separated(const DirectedMixedGraph& g, const SeparationQuery& q) {
    validate(g, q);
    return separated_by_walks(g, q, component_ids(g));
}

DirectedMixedGraph acyclify(const DirectedMixedGraph& g) {
    DirectedMixedGraph out(g.nodes());
    const auto comps = strongly_connected_components(g);
    const auto id = component_ids(g);
    for (const auto& e : g.edges()) {
        const auto cs = id[static_cast<std::size_t>(e.src)];
        const auto cd = id[static_cast<std::size_t>(e.dst)];
        if (!e.is_directed()) {
            if (cs != cd) out.add_edge({e.src, e.dst, e.src_mark, e.dst_mark, {}});
            continue;
        }
        if (cs == cd) continue;
        for (int w : comps[static_cast<std::size_t>(cd)]) out.add_directed(e.src, w);
    }
    for (const auto& c : comps)
        for (std::size_t i = 0; i < c.size(); ++i)
            for (std::size_t j = i + 1; j < c.size(); ++j) out.add_undirected(c[i], c[j]);
    return out;
}

namespace {

// Rank of a symmetric record when several graphs disagree on the pair.
int symmetric_rank(EdgeMark m) {
    switch (m) {
        case EdgeMark::Tail: return 0;
        case EdgeMark::Arrow: return 1;
        case EdgeMark::Undirected: return 2;
    }
    return 0;
}

struct PairUnion {
    bool forward = false;   // low -> high
    bool backward = false;  // high -> low
    std::optional<EdgeMark> symmetric;
};

std::map<NodePair, PairUnion> collect_pairs(const std::vector<const DirectedMixedGraph*>& graphs) {
    std::map<NodePair, PairUnion> pairs;
    for (const auto* g : graphs) {
        for (const auto& e : g->edges()) {
            auto& p = pairs[make_pair_key(e.src, e.dst)];
            if (e.is_directed()) {
                (e.src < e.dst ? p.forward : p.backward) = true;
            } else if (!p.symmetric || symmetric_rank(e.src_mark) > symmetric_rank(*p.symmetric)) {
                p.symmetric = e.src_mark;
            }
        }
    }
    return pairs;
}

DirectedMixedGraph build_union(const std::vector<const DirectedMixedGraph*>& graphs) {
    DirectedMixedGraph out(graphs.front()->nodes());
    for (const auto& [key, p] : collect_pairs(graphs)) {
        if (p.symmetric) {
            out.add_edge({key.first, key.second, *p.symmetric, *p.symmetric, {}});
            continue;
        }
        if (p.forward) out.add_directed(key.first, key.second);
        if (p.backward) out.add_directed(key.second, key.first);
    }
    return out;
}

}  // namespace

DirectedMixedGraph union_of_graphs(const std::vector<DirectedMixedGraph>& graphs) {
    if (graphs.empty()) throw GraphError("union of an empty list of graphs");
    std::vector<const DirectedMixedGraph*> ptrs;
    for (const auto& g : graphs) {
        if (!g.same_nodes(graphs.front())) throw GraphError("union requires identical node sets");
        ptrs.push_back(&g);
    }
    return build_union(ptrs);
}

DirectedMixedGraph labeled_union(const std::map<int, DirectedMixedGraph>& graphs) {
    if (graphs.size() < 2) throw GraphError("labeled union needs at least two contexts");
    std::vector<const DirectedMixedGraph*> ptrs;
    for (const auto& [r, g] : graphs) {
        if (!g.same_nodes(graphs.begin()->second)) throw GraphError("labeled union requires identical node sets");
        ptrs.push_back(&g);
    }
    const auto merged = build_union(ptrs);
    DirectedMixedGraph out(merged.nodes());
    for (auto e : merged.edges()) {
        std::set<int> present;
        for (const auto& [r, g] : graphs) {
            const bool has = e.is_directed() ? g.has_directed(e.src, e.dst) : g.adjacent(e.src, e.dst);
            if (has) present.insert(r);
        }
        if (present.size() < graphs.size()) e.labels = std::move(present);
        out.add_edge(std::move(e));
    }
    return out;
}

bool cycles_are_edge_flips(const DirectedMixedGraph& g) {
    const auto id = component_ids(g);
    const int n = static_cast<int>(g.num_nodes());
    std::vector<int> forest(static_cast<std::size_t>(n));
    std::iota(forest.begin(), forest.end(), 0);
    auto root = [&](int v) {
        while (forest[static_cast<std::size_t>(v)] != v) v = forest[static_cast<std::size_t>(v)];
        return v;
    };
    for (const auto& e : g.edges()) {
        if (!e.is_directed()) continue;
        const bool flip = g.has_directed(e.dst, e.src);
        if (!flip) {
            if (id[static_cast<std::size_t>(e.src)] == id[static_cast<std::size_t>(e.dst)]) return false;
            continue;
        }
        if (e.src > e.dst) continue;  // visit each 2-cycle once
        const int a = root(e.src);
        const int b = root(e.dst);
        if (a == b) return false;  // 2-cycles close a longer cycle
        forest[static_cast<std::size_t>(a)] = b;
    }
    return true;
}

}  // namespace ctxcd
