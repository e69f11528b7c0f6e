#ifndef CTXCD_GRAPH_IO_HPP
#define CTXCD_GRAPH_IO_HPP

#include <filesystem>
#include <string>

#include "ctxcd/graph.hpp"

namespace ctxcd {

// {"nodes":[{"id","name","is_context"}],
//  "edges":[{"src","dst","src_mark","dst_mark","labels":[...]}]}
std::string graph_to_json(const DirectedMixedGraph& g, int indent = 2);
DirectedMixedGraph graph_from_json(const std::string& text);

void write_graph(const std::filesystem::path& path, const DirectedMixedGraph& g);
DirectedMixedGraph read_graph(const std::filesystem::path& path);

}  // namespace ctxcd

#endif  // CTXCD_GRAPH_IO_HPP
