#pragma once

#include <string>

#include "json.hpp"

#include "scg/graph.hpp"

namespace scg {

using json = nlohmann::json;

// Parses text, reporting "<what>:<line>:<col>: msg" as ConfigError/ParseError.
json parse_json_text(const std::string& text, const std::string& what);
std::string read_file(const std::string& path);

// {"nodes": [{name, kind, family?, parents, expr? | logits? | prob? | mean?, logstd?}], "costs": [...]}
Graph graph_from_json(const json& doc);
Graph load_graph(const std::string& path);
json graph_to_json(const Graph& g);

}  // namespace scg
