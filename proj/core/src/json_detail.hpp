#ifndef CTXCD_SRC_JSON_DETAIL_HPP
#define CTXCD_SRC_JSON_DETAIL_HPP

#include <json.hpp>

#include "ctxcd/graph.hpp"

namespace ctxcd::detail {

nlohmann::json graph_to_json_value(const DirectedMixedGraph& g);
DirectedMixedGraph graph_from_json_value(const nlohmann::json& doc);

}  // namespace ctxcd::detail

#endif  // CTXCD_SRC_JSON_DETAIL_HPP
