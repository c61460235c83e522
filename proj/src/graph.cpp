#include "locind/graph.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

namespace locind {

namespace {

std::string summarize(const std::vector<Violation>& violations) {
    std::ostringstream os;
    os << "invalid local independence graph (" << violations.size() << " violation"
       << (violations.size() == 1 ? "" : "s") << ")";
    for (const auto& v : violations) os << "; " << to_string(v.kind) << ": " << v.message;
    return os.str();
}

// Strongly connected components with more than one member (Tarjan).
std::vector<std::vector<std::size_t>> cyclic_components(
    const std::vector<std::vector<std::size_t>>& adjacency) {
    const std::size_t n = adjacency.size();
    std::vector<int> index(n, -1), low(n, 0);
    std::vector<bool> on_stack(n, false);
    std::vector<std::size_t> stack;
    std::vector<std::vector<std::size_t>> out;
    int counter = 0;

    std::function<void(std::size_t)> visit = [&](std::size_t v) {
        index[v] = low[v] = counter++;
        stack.push_back(v);
        on_stack[v] = true;
        for (std::size_t w : adjacency[v]) {
            if (index[w] < 0) {
                visit(w);
                low[v] = std::min(low[v], low[w]);
            } else if (on_stack[w]) {
                low[v] = std::min(low[v], index[w]);
            }
        }
        if (low[v] == index[v]) {
            std::vector<std::size_t> component;
            std::size_t w;
            do {
                w = stack.back();
                stack.pop_back();
                on_stack[w] = false;
                component.push_back(w);
            } while (w != v);
            if (component.size() > 1) {
                std::sort(component.begin(), component.end());
                out.push_back(std::move(component));
            }
        }
    };
    for (std::size_t v = 0; v < n; ++v)
        if (index[v] < 0) visit(v);
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

std::string to_string(NodeKind kind) { return kind == NodeKind::Baseline ? "baseline" : "process"; }

std::string to_string(Role role) {
    switch (role) {
        case Role::Treatment: return "treatment";
        case Role::Outcome: return "outcome";
        case Role::Censoring: return "censoring";
        case Role::Latent: return "latent";
        case Role::BaselineKeep: return "baseline_keep";
        case Role::Marginalize: return "marginalize";
    }
    return "?";
}

std::string to_string(ViolationKind kind) {
    switch (kind) {
        case ViolationKind::EmptyNodeId: return "EmptyNodeId";
        case ViolationKind::DuplicateNode: return "DuplicateNode";
        case ViolationKind::UnknownEndpoint: return "UnknownEndpoint";
        case ViolationKind::SelfEdge: return "SelfEdge";
        case ViolationKind::DuplicateEdge: return "DuplicateEdge";
        case ViolationKind::ProcessToBaselineEdge: return "ProcessToBaselineEdge";
        case ViolationKind::BaselineCycle: return "BaselineCycle";
        case ViolationKind::MultipleCensoringNodes: return "MultipleCensoringNodes";
        case ViolationKind::MultipleTreatmentNodes: return "MultipleTreatmentNodes";
        case ViolationKind::CensoringNotProcess: return "CensoringNotProcess";
        case ViolationKind::InvalidRole: return "InvalidRole";
    }
    return "?";
}

NodeKind parse_node_kind(const std::string& text) {
    if (text == "baseline") return NodeKind::Baseline;
    if (text == "process") return NodeKind::Process;
    throw std::invalid_argument("unknown node kind '" + text + "'");
}

Role parse_role(const std::string& text) {
    if (text == "treatment") return Role::Treatment;
    if (text == "outcome") return Role::Outcome;
    if (text == "censoring") return Role::Censoring;
    if (text == "latent") return Role::Latent;
    if (text == "baseline_keep" || text == "covariate") return Role::BaselineKeep;
    if (text == "marginalize") return Role::Marginalize;
    throw std::invalid_argument("unknown role '" + text + "'");
}

GraphError::GraphError(std::vector<Violation> violations)
    : std::runtime_error(summarize(violations)), violations_(std::move(violations)) {}

std::vector<Violation> validate_graph(const std::vector<NodeSpec>& nodes,
                                      const std::vector<Edge>& edges) {
    std::vector<Violation> out;
    std::map<NodeId, const NodeSpec*> by_id;
    std::vector<NodeId> censoring, treatment;

    for (const auto& n : nodes) {
        if (n.id.empty()) {
            out.push_back({ViolationKind::EmptyNodeId, "node with empty id", {}});
            continue;
        }
        if (!by_id.emplace(n.id, &n).second) {
            out.push_back({ViolationKind::DuplicateNode, "node '" + n.id + "' declared twice", {n.id}});
            continue;
        }
        if (n.roles.count(Role::Censoring)) {
            censoring.push_back(n.id);
            if (n.kind != NodeKind::Process)
                out.push_back({ViolationKind::CensoringNotProcess,
                               "censoring node '" + n.id + "' must be a process", {n.id}});
        }
        if (n.roles.count(Role::Treatment)) treatment.push_back(n.id);
        if (n.roles.size() > 1)
            out.push_back({ViolationKind::InvalidRole,
                           "node '" + n.id + "' carries more than one role", {n.id}});
        const bool baseline = n.kind == NodeKind::Baseline;
        for (Role r : {Role::Treatment, Role::Outcome})
            if (baseline && n.roles.count(r))
                out.push_back({ViolationKind::InvalidRole,
                               "baseline node '" + n.id + "' cannot be tagged " + to_string(r), {n.id}});
        if (!baseline && n.roles.count(Role::BaselineKeep))
            out.push_back({ViolationKind::InvalidRole,
                           "process node '" + n.id + "' cannot be tagged baseline_keep", {n.id}});
    }
    if (censoring.size() > 1)
        out.push_back({ViolationKind::MultipleCensoringNodes, "more than one censoring node", censoring});
    if (treatment.size() > 1)
        out.push_back({ViolationKind::MultipleTreatmentNodes, "more than one treatment node", treatment});

    std::set<Edge> seen;
    std::map<NodeId, std::size_t> baseline_index;
    for (const auto& [id, spec] : by_id)
        if (spec->kind == NodeKind::Baseline) baseline_index.emplace(id, baseline_index.size());
    std::vector<std::vector<std::size_t>> baseline_adj(baseline_index.size());
    std::vector<NodeId> baseline_names(baseline_index.size());
    for (const auto& [id, i] : baseline_index) baseline_names[i] = id;

    for (const auto& e : edges) {
        const auto from = by_id.find(e.from);
        const auto to = by_id.find(e.to);
        const std::string label = "'" + e.from + "' -> '" + e.to + "'";
        if (from == by_id.end() || to == by_id.end()) {
            std::vector<NodeId> missing;
            if (from == by_id.end()) missing.push_back(e.from);
            if (to == by_id.end() && e.to != e.from) missing.push_back(e.to);
            out.push_back({ViolationKind::UnknownEndpoint, "edge " + label + " has an unknown endpoint",
                           missing});
            continue;
        }
        if (e.from == e.to) {
            out.push_back({ViolationKind::SelfEdge, "self edge on '" + e.from + "'", {e.from}});
            continue;
        }
        if (!seen.insert(e).second) {
            out.push_back({ViolationKind::DuplicateEdge, "edge " + label + " listed twice", {e.from, e.to}});
            continue;
        }
        const bool from_process = from->second->kind == NodeKind::Process;
        const bool to_baseline = to->second->kind == NodeKind::Baseline;
        if (from_process && to_baseline) {
            out.push_back({ViolationKind::ProcessToBaselineEdge,
                           "edge " + label + " points from a process to a baseline variable",
                           {e.from, e.to}});
            continue;
        }
        if (!from_process && to_baseline)
            baseline_adj[baseline_index.at(e.from)].push_back(baseline_index.at(e.to));
    }

    for (const auto& component : cyclic_components(baseline_adj)) {
        std::vector<NodeId> ids;
        std::string names;
        for (std::size_t i : component) {
            ids.push_back(baseline_names[i]);
            names += (names.empty() ? "" : ", ") + baseline_names[i];
        }
        out.push_back({ViolationKind::BaselineCycle, "directed cycle among baseline variables {" + names + "}",
                       ids});
    }
    return out;
}

LocalIndependenceGraph build_graph(std::vector<NodeSpec> nodes, std::vector<Edge> edges) {
    auto violations = validate_graph(nodes, edges);
    if (!violations.empty()) throw GraphError(std::move(violations));

    LocalIndependenceGraph g;
    std::sort(nodes.begin(), nodes.end(), [](const NodeSpec& a, const NodeSpec& b) { return a.id < b.id; });
    std::sort(edges.begin(), edges.end());
    g.nodes_ = std::move(nodes);
    g.edges_ = std::move(edges);
    for (std::size_t i = 0; i < g.nodes_.size(); ++i) g.index_.emplace(g.nodes_[i].id, i);
    g.out_.assign(g.nodes_.size(), {});
    g.in_.assign(g.nodes_.size(), {});
    for (const auto& e : g.edges_) {
        const std::size_t a = g.index_.at(e.from), b = g.index_.at(e.to);
        g.out_[a].push_back(b);
        g.in_[b].push_back(a);
    }
    for (auto& v : g.out_) std::sort(v.begin(), v.end());
    for (auto& v : g.in_) std::sort(v.begin(), v.end());
    return g;
}

std::size_t LocalIndependenceGraph::index_of(const NodeId& id) const {
    const auto it = index_.find(id);
    if (it == index_.end()) throw UnknownNodeError(id);
    return it->second;
}

bool LocalIndependenceGraph::has_role(const NodeId& id, Role role) const {
    return node(id).roles.count(role) != 0;
}

bool LocalIndependenceGraph::has_edge(const NodeId& from, const NodeId& to) const {
    return std::binary_search(edges_.begin(), edges_.end(), Edge{from, to});
}

NodeSet LocalIndependenceGraph::parents(const NodeId& v) const {
    NodeSet out;
    for (std::size_t p : in_[index_of(v)]) out.insert(nodes_[p].id);
    return out;
}

NodeSet LocalIndependenceGraph::children(const NodeId& v) const {
    NodeSet out;
    for (std::size_t c : out_[index_of(v)]) out.insert(nodes_[c].id);
    return out;
}

namespace {

template <class Next>
std::vector<bool> reach(std::size_t n, std::size_t start, Next next) {
    std::vector<bool> seen(n, false);
    const auto& first = next(start);
    std::vector<std::size_t> stack(first.begin(), first.end());
    while (!stack.empty()) {
        const std::size_t v = stack.back();
        stack.pop_back();
        if (seen[v]) continue;
        seen[v] = true;
        for (std::size_t w : next(v))
            if (!seen[w]) stack.push_back(w);
    }
    return seen;
}

}  // namespace

std::vector<bool> descendant_mask(const LocalIndependenceGraph& graph, std::size_t v) {
    return reach(graph.size(), v, [&](std::size_t u) -> const auto& { return graph.out_indices(u); });
}

std::vector<bool> ancestor_or_self_mask(const LocalIndependenceGraph& graph,
                                        const std::vector<bool>& seeds) {
    std::vector<bool> seen(seeds);
    std::vector<std::size_t> stack;
    for (std::size_t i = 0; i < seeds.size(); ++i)
        if (seeds[i]) stack.push_back(i);
    while (!stack.empty()) {
        const std::size_t v = stack.back();
        stack.pop_back();
        for (std::size_t p : graph.in_indices(v))
            if (!seen[p]) {
                seen[p] = true;
                stack.push_back(p);
            }
    }
    return seen;
}

NodeSet LocalIndependenceGraph::ancestors(const NodeId& v) const {
    const auto mask = reach(size(), index_of(v), [this](std::size_t u) -> const auto& { return in_[u]; });
    NodeSet out;
    for (std::size_t i = 0; i < mask.size(); ++i)
        if (mask[i]) out.insert(nodes_[i].id);
    return out;
}

NodeSet LocalIndependenceGraph::descendants(const NodeId& v) const {
    const auto mask = reach(size(), index_of(v), [this](std::size_t u) -> const auto& { return out_[u]; });
    NodeSet out;
    for (std::size_t i = 0; i < mask.size(); ++i)
        if (mask[i]) out.insert(nodes_[i].id);
    return out;
}

std::vector<NodeId> LocalIndependenceGraph::nodes_with_role(Role role) const {
    std::vector<NodeId> out;
    for (const auto& n : nodes_)
        if (n.roles.count(role)) out.push_back(n.id);
    return out;
}

std::optional<NodeId> LocalIndependenceGraph::unique_role(Role role) const {
    const auto all = nodes_with_role(role);
    if (all.empty()) return std::nullopt;
    return all.front();
}

LocalIndependenceGraph induced_subgraph(const LocalIndependenceGraph& graph, const NodeSet& keep) {
    for (const auto& id : keep)
        if (!graph.contains(id)) throw UnknownNodeError(id);
    std::vector<NodeSpec> nodes;
    for (const auto& n : graph.nodes())
        if (keep.count(n.id)) nodes.push_back(n);
    std::vector<Edge> edges;
    for (const auto& e : graph.edges())
        if (keep.count(e.from) && keep.count(e.to)) edges.push_back(e);
    return build_graph(std::move(nodes), std::move(edges));
}

LocalIndependenceGraph with_roles(const LocalIndependenceGraph& graph, const NodeId& id,
                                  std::set<Role> roles) {
    graph.index_of(id);
    std::vector<NodeSpec> nodes = graph.nodes();
    for (auto& n : nodes)
        if (n.id == id) n.roles = std::move(roles);
    return build_graph(std::move(nodes), graph.edges());
}

}  // namespace locind
