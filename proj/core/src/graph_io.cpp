#include "ctxcd/graph_io.hpp"

#include <fstream>
#include <sstream>

#include "json_detail.hpp"

namespace ctxcd {

namespace detail {

nlohmann::json graph_to_json_value(const DirectedMixedGraph& g) {
    nlohmann::json nodes = nlohmann::json::array();
    for (std::size_t i = 0; i < g.num_nodes(); ++i) {
        const auto& n = g.nodes()[i];
        nodes.push_back({{"id", i}, {"name", n.name}, {"is_context", n.is_context}});
    }
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& e : g.edges()) {
        edges.push_back({{"src", e.src},
                         {"dst", e.dst},
                         {"src_mark", std::string(to_string(e.src_mark))},
                         {"dst_mark", std::string(to_string(e.dst_mark))},
                         {"labels", std::vector<int>(e.labels.begin(), e.labels.end())}});
    }
    return {{"nodes", nodes}, {"edges", edges}};
}

DirectedMixedGraph graph_from_json_value(const nlohmann::json& doc) {
    if (!doc.contains("nodes") || !doc.contains("edges")) throw GraphError("graph JSON needs 'nodes' and 'edges'");

    const auto& jn = doc.at("nodes");
    std::vector<Node> nodes(jn.size());
    std::vector<bool> seen(jn.size(), false);
    for (const auto& n : jn) {
        const auto id = n.at("id").get<std::size_t>();
        if (id >= nodes.size() || seen[id]) throw GraphError("node ids must be unique and dense from 0");
        seen[id] = true;
        nodes[id] = {n.at("name").get<std::string>(), n.value("is_context", false)};
    }
    DirectedMixedGraph g(std::move(nodes));
    for (const auto& e : doc.at("edges")) {
        Edge edge{e.at("src").get<int>(), e.at("dst").get<int>(),
                  edge_mark_from_string(e.at("src_mark").get<std::string>()),
                  edge_mark_from_string(e.at("dst_mark").get<std::string>()), {}};
        if (e.contains("labels"))
            for (int r : e.at("labels")) edge.labels.insert(r);
        g.add_edge(std::move(edge));
    }
    return g;
}

}  // namespace detail

std::string graph_to_json(const DirectedMixedGraph& g, int indent) { return detail::graph_to_json_value(g).dump(indent); }

DirectedMixedGraph graph_from_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw GraphError(std::string("malformed graph JSON: ") + e.what());
    }
    try {
        return detail::graph_from_json_value(doc);
    } catch (const nlohmann::json::exception& e) {
        throw GraphError(std::string("invalid graph JSON: ") + e.what());
    }
}

void write_graph(const std::filesystem::path& path, const DirectedMixedGraph& g) {
    std::ofstream out(path);
    if (!out) throw GraphError("cannot write " + path.string());
    out << graph_to_json(g) << '\n';
}

DirectedMixedGraph read_graph(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw GraphError("cannot read " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return graph_from_json(buf.str());
}

}  // namespace ctxcd
