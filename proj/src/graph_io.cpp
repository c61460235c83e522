#include "locind/graph_io.hpp"

#include <fstream>
#include <sstream>

namespace locind {

namespace {

void reject_unknown_keys(const nlohmann::json& obj, std::initializer_list<const char*> allowed,
                         const std::string& where) {
    if (!obj.is_object()) throw ParseError(where + " must be a JSON object");
    for (const auto& [key, _] : obj.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) throw ParseError("unknown key '" + key + "' in " + where);
    }
}

std::string require_string(const nlohmann::json& obj, const char* key, const std::string& where) {
    const auto it = obj.find(key);
    if (it == obj.end() || !it->is_string())
        throw ParseError(where + " requires string field '" + key + "'");
    return it->get<std::string>();
}

}  // namespace

GraphDescription parse_graph_description(const nlohmann::json& doc) {
    reject_unknown_keys(doc, {"nodes", "edges"}, "graph");
    GraphDescription out;
    const auto nodes = doc.find("nodes");
    if (nodes == doc.end() || !nodes->is_array()) throw ParseError("graph requires a 'nodes' array");
    for (const auto& n : *nodes) {
        reject_unknown_keys(n, {"id", "kind", "roles"}, "node");
        NodeSpec spec;
        spec.id = require_string(n, "id", "node");
        try {
            spec.kind = parse_node_kind(require_string(n, "kind", "node '" + spec.id + "'"));
            if (const auto roles = n.find("roles"); roles != n.end()) {
                if (!roles->is_array()) throw ParseError("roles of '" + spec.id + "' must be an array");
                for (const auto& r : *roles) {
                    if (!r.is_string()) throw ParseError("roles of '" + spec.id + "' must be strings");
                    spec.roles.insert(parse_role(r.get<std::string>()));
                }
            }
        } catch (const std::invalid_argument& e) {
            throw ParseError(e.what());
        }
        out.nodes.push_back(std::move(spec));
    }
    if (const auto edges = doc.find("edges"); edges != doc.end()) {
        if (!edges->is_array()) throw ParseError("'edges' must be an array");
        for (const auto& e : *edges) {
            reject_unknown_keys(e, {"from", "to"}, "edge");
            out.edges.push_back({require_string(e, "from", "edge"), require_string(e, "to", "edge")});
        }
    }
    return out;
}

LocalIndependenceGraph graph_from_json(const nlohmann::json& doc) {
    auto desc = parse_graph_description(doc);
    return build_graph(std::move(desc.nodes), std::move(desc.edges));
}

nlohmann::json graph_to_json(const LocalIndependenceGraph& graph) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : graph.nodes()) {
        nlohmann::json roles = nlohmann::json::array();
        for (Role r : n.roles) roles.push_back(to_string(r));
        nodes.push_back({{"id", n.id}, {"kind", to_string(n.kind)}, {"roles", roles}});
    }
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& e : graph.edges()) edges.push_back({{"from", e.from}, {"to", e.to}});
    return {{"nodes", nodes}, {"edges", edges}};
}

nlohmann::json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("malformed JSON in '" + path + "': " + e.what());
    }
}

LocalIndependenceGraph load_graph_file(const std::string& path) {
    return graph_from_json(load_json_file(path));
}

std::string serialize_text(const LocalIndependenceGraph& graph) {
    std::ostringstream os;
    for (const auto& n : graph.nodes()) {
        os << "node " << n.id << ' ' << to_string(n.kind);
        for (Role r : n.roles) os << ' ' << to_string(r);
        os << '\n';
    }
    for (const auto& e : graph.edges()) os << "edge " << e.from << ' ' << e.to << '\n';
    return os.str();
}

LocalIndependenceGraph parse_text(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::vector<NodeSpec> nodes;
    std::vector<Edge> edges;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        try {
            if (tag == "node") {
                NodeSpec n;
                std::string kind, role;
                if (!(ls >> n.id >> kind)) throw ParseError("incomplete node line");
                n.kind = parse_node_kind(kind);
                while (ls >> role) n.roles.insert(parse_role(role));
                nodes.push_back(std::move(n));
            } else if (tag == "edge") {
                Edge e;
                if (!(ls >> e.from >> e.to)) throw ParseError("incomplete edge line");
                edges.push_back(std::move(e));
            } else {
                throw ParseError("unknown record '" + tag + "'");
            }
        } catch (const std::invalid_argument& e) {
            throw ParseError("line " + std::to_string(lineno) + ": " + e.what());
        } catch (const ParseError& e) {
            throw ParseError("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return build_graph(std::move(nodes), std::move(edges));
}

nlohmann::json violations_to_json(const std::vector<Violation>& violations) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& v : violations)
        out.push_back({{"rule", to_string(v.kind)}, {"message", v.message}, {"nodes", v.nodes}});
    return out;
}

}  // namespace locind
