#ifndef CTXCD_DISCOVERY_HPP
#define CTXCD_DISCOVERY_HPP

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ctxcd/citest.hpp"
#include "ctxcd/graph.hpp"

namespace ctxcd {

class DiscoveryError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class LinkMode { None, RChildren, RAll };
std::string to_string(LinkMode m);
LinkMode link_mode_from_string(const std::string& s);

/// Known R-links supplied as input. Fixed edges are directed (from, to) pairs
/// with R on exactly one end and are never tested.
struct LinkAssumptions {
    LinkMode mode = LinkMode::None;
    std::set<std::pair<int, int>> fixed_edges;

    /// RChildren fixes R -> child for every child of R in `truth`; RAll also
    /// fixes the parents of R and declares every other R pair non-adjacent.
    static LinkAssumptions from_graph(LinkMode mode, const DirectedMixedGraph& truth);
    void validate(int context_node) const;
};

enum class Method { AC, Masked, Pooled, Baseline };
std::string to_string(Method m);
Method method_from_string(const std::string& s);

struct DiscoveryConfig {
    double alpha = 0.05;
    std::optional<int> max_sepset_size;
    Method method = Method::AC;
    LinkAssumptions links;
};

struct Sepset {
    std::vector<int> set;
    std::optional<int> context;  // set for context-restricted tests
    bool assumed = false;        // removed by a link assumption, never tested
};

using SepsetMap = std::map<NodePair, Sepset>;

struct DiscoveryResult {
    Method method = Method::AC;
    std::map<int, DirectedMixedGraph> context_graphs;  // empty for Pooled
    DirectedMixedGraph union_graph;
    DirectedMixedGraph labeled_union;
    /// Separating sets per skeleton run: context value, or nullopt for the pooled run.
    std::map<std::optional<int>, SepsetMap> sepsets;
    long test_count = 0;
};

// ---------------------------------------------------------------------------
// Skeleton search

struct TestOutcome {
    bool independent = false;
    std::optional<int> context;
};

using SkeletonTest = std::function<TestOutcome(int i, int j, const std::vector<int>& s)>;

struct SkeletonOptions {
    std::optional<int> max_sepset_size;
    std::set<NodePair> fixed;      // kept adjacent, never tested
    std::set<NodePair> forbidden;  // removed before the search
    bool record_trace = false;
};

struct SkeletonResult {
    std::set<NodePair> adjacencies;
    SepsetMap sepsets;
    /// Level at which each tested pair was removed.
    std::map<NodePair, int> removal_level;
    /// Frozen adjacency sets per level when tracing is on.
    std::vector<std::vector<std::set<int>>> frozen;
};

/// PC-stable over `active` nodes (ids below `num_nodes`). Pairs are visited for
/// ascending j and neighbors i of the level-frozen adjacency of j; candidate
/// sets are enumerated lexicographically and the first affirmative
/// independence removes the edge.
SkeletonResult pc_stable_skeleton(int num_nodes, const std::vector<int>& active, const SkeletonTest& test,
                                  const SkeletonOptions& opts = {});

/// v-structures (k not in the separating set) then Meek rules 1-4 to closure.
/// Fixed edges are oriented first. Opposing arrowheads are kept as two
/// directed records. Triples across an assumed non-adjacency are left alone.
DirectedMixedGraph orient(const DirectedMixedGraph& nodes_only, const std::set<NodePair>& skeleton,
                          const SepsetMap& sepsets, const std::set<std::pair<int, int>>& fixed_edges = {});

// ---------------------------------------------------------------------------
// Strategies

DiscoveryResult pc_ac(const CiDispatcher& cit, const DiscoveryConfig& cfg);
DiscoveryResult pc_masked(const CiDispatcher& cit, const DiscoveryConfig& cfg);
DiscoveryResult pc_pooled(const CiDispatcher& cit, const DiscoveryConfig& cfg);
DiscoveryResult pc_baseline(const CiDispatcher& cit, const DiscoveryConfig& cfg);

/// Dispatches on cfg.method.
DiscoveryResult discover(const CiDispatcher& cit, const DiscoveryConfig& cfg);

void write_sepsets_csv(std::ostream& out, const DiscoveryResult& result);

}  // namespace ctxcd

#endif  // CTXCD_DISCOVERY_HPP
