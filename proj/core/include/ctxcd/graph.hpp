#ifndef CTXCD_GRAPH_HPP
#define CTXCD_GRAPH_HPP

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ctxcd {

/// Endpoint annotation of an edge record.
enum class EdgeMark { Tail, Arrow, Undirected };

std::string_view to_string(EdgeMark m);
EdgeMark edge_mark_from_string(std::string_view s);

struct Node {
    std::string name;
    bool is_context = false;

    bool operator==(const Node&) const = default;
};

/// One edge record. A directed edge u -> v is (u, v, Tail, Arrow); a skeleton
/// edge is (u, v, Undirected, Undirected). `labels` holds the context values
/// in which the edge is present when it is not present in all of them.
struct Edge {
    int src = 0;
    int dst = 0;
    EdgeMark src_mark = EdgeMark::Tail;
    EdgeMark dst_mark = EdgeMark::Arrow;
    std::set<int> labels;

    bool is_directed() const { return src_mark == EdgeMark::Tail && dst_mark == EdgeMark::Arrow; }
    bool operator==(const Edge&) const = default;
};

class GraphError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using NodePair = std::pair<int, int>;

inline NodePair make_pair_key(int a, int b) { return a < b ? NodePair{a, b} : NodePair{b, a}; }

/// Graph with per-endpoint marks. Each unordered node pair holds either one
/// symmetric record (both marks equal) or up to two directed records, one per
/// direction, so that 2-cycles X -> Y, Y -> X are first class.
class DirectedMixedGraph {
public:
    DirectedMixedGraph() = default;
    explicit DirectedMixedGraph(std::vector<Node> nodes);

    /// System nodes named X1..Xd followed by an optional context node R.
    static DirectedMixedGraph with_system_nodes(std::size_t d, bool with_context);

    int add_node(std::string name, bool is_context = false);

    std::size_t num_nodes() const { return nodes_.size(); }
    const std::vector<Node>& nodes() const { return nodes_; }
    const Node& node(int v) const;
    std::optional<int> context_node() const;
    std::optional<int> find_node(std::string_view name) const;
    bool contains(int v) const { return v >= 0 && static_cast<std::size_t>(v) < nodes_.size(); }

    /// Inserts a record. A directed record replaces a symmetric record on the
    /// same pair; a symmetric record replaces everything on the pair.
    void add_edge(Edge e);
    void add_directed(int from, int to, std::set<int> labels = {});
    void add_undirected(int a, int b);

    void remove_directed(int from, int to);
    void remove_adjacency(int a, int b);

    bool adjacent(int a, int b) const;
    /// True iff a record with Tail at `from` and Arrow at `to` exists.
    bool has_directed(int from, int to) const;
    bool has_undirected(int a, int b) const;
    /// Records stored on the pair (0, 1 or 2 entries).
    std::vector<Edge> records(int a, int b) const;

    std::vector<int> neighbors(int v) const;
    std::vector<int> parents(int v) const;
    std::vector<int> children(int v) const;

    /// All records in ascending (min, max) pair order.
    std::vector<Edge> edges() const;
    std::size_t num_records() const;
    std::set<NodePair> skeleton() const;

    bool same_nodes(const DirectedMixedGraph& other) const { return nodes_ == other.nodes_; }
    bool operator==(const DirectedMixedGraph& other) const;

private:
    struct Slot {
        std::optional<Edge> low_high;  // src < dst, or a symmetric record
        std::optional<Edge> high_low;  // src > dst
    };

    void check_node(int v) const;
    Slot* slot(int a, int b);
    const Slot* slot(int a, int b) const;

    std::vector<Node> nodes_;
    std::map<NodePair, Slot> slots_;
    std::vector<std::set<int>> adjacency_;
};

struct SeparationQuery {
    int x = 0;
    int y = 0;
    std::set<int> z;
};

/// All u with a directed path u -> ... -> v; v included.
std::set<int> ancestors(const DirectedMixedGraph& g, int v);
std::set<int> ancestors(const DirectedMixedGraph& g, const std::set<int>& vs);
std::set<int> descendants(const DirectedMixedGraph& g, int v);

/// Strongly connected components over directed records, each sorted, ordered
/// by smallest member.
std::vector<std::vector<int>> strongly_connected_components(const DirectedMixedGraph& g);
bool is_acyclic(const DirectedMixedGraph& g);

/// d-separation via reachability over (node, arrival) states. Throws
/// GraphError on a cyclic graph. Undirected marks are read as arrowheads,
/// which is how acyclified strongly connected components behave.
bool d_separated(const DirectedMixedGraph& g, const SeparationQuery& q);

/// sigma-separation: a non-collider in z only blocks when the walk leaves its
/// strongly connected component through a tail at that node.
bool sigma_separated(const DirectedMixedGraph& g, const SeparationQuery& q);

/// Parents of any member point at every member of its component; members of a
/// nontrivial component are pairwise joined by undirected edges.
DirectedMixedGraph acyclify(const DirectedMixedGraph& g);

DirectedMixedGraph union_of_graphs(const std::vector<DirectedMixedGraph>& graphs);
DirectedMixedGraph labeled_union(const std::map<int, DirectedMixedGraph>& graphs);

/// True iff every directed cycle has length 2, i.e. each cycle is a single
/// edge present in both directions.
bool cycles_are_edge_flips(const DirectedMixedGraph& g);

}  // namespace ctxcd

#endif  // CTXCD_GRAPH_HPP
