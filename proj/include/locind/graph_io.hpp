#pragma once

#include <nlohmann/json.hpp>

#include <stdexcept>
#include <string>
#include <vector>

#include "locind/graph.hpp"

namespace locind {

/// Malformed input (bad JSON shape, unknown keys, bad tokens). Distinct from
/// GraphError, which reports structural rule violations of well-formed input.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct GraphDescription {
    std::vector<NodeSpec> nodes;
    std::vector<Edge> edges;
};

/// `{"nodes":[{"id":..,"kind":..,"roles":[..]}], "edges":[{"from":..,"to":..}]}`.
/// Unknown keys are rejected.
GraphDescription parse_graph_description(const nlohmann::json& doc);
LocalIndependenceGraph graph_from_json(const nlohmann::json& doc);
nlohmann::json graph_to_json(const LocalIndependenceGraph& graph);

LocalIndependenceGraph load_graph_file(const std::string& path);
nlohmann::json load_json_file(const std::string& path);

// Line-oriented, sorted form: one `node <id> <kind> [role...]` line per node,
// then one `edge <from> <to>` line per edge.
std::string serialize_text(const LocalIndependenceGraph& graph);
LocalIndependenceGraph parse_text(const std::string& text);

nlohmann::json violations_to_json(const std::vector<Violation>& violations);

}  // namespace locind
