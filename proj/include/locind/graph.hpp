#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace locind {

using NodeId = std::string;
using NodeSet = std::set<NodeId>;

enum class NodeKind { Baseline, Process };

// Role tags are metadata only; separation queries never read them.
enum class Role { Treatment, Outcome, Censoring, Latent, BaselineKeep, Marginalize };

struct NodeSpec {
    NodeId id;
    NodeKind kind = NodeKind::Process;
    std::set<Role> roles;
};

struct Edge {
    NodeId from;
    NodeId to;

    friend auto operator<=>(const Edge&, const Edge&) = default;
};

enum class ViolationKind {
    EmptyNodeId,
    DuplicateNode,
    UnknownEndpoint,
    SelfEdge,
    DuplicateEdge,
    ProcessToBaselineEdge,
    BaselineCycle,
    MultipleCensoringNodes,
    MultipleTreatmentNodes,
    CensoringNotProcess,
    InvalidRole,
};

struct Violation {
    ViolationKind kind;
    std::string message;
    std::vector<NodeId> nodes;
};

std::string to_string(NodeKind kind);
std::string to_string(Role role);
std::string to_string(ViolationKind kind);
NodeKind parse_node_kind(const std::string& text);
Role parse_role(const std::string& text);

class GraphError : public std::runtime_error {
public:
    explicit GraphError(std::vector<Violation> violations);
    const std::vector<Violation>& violations() const noexcept { return violations_; }

private:
    std::vector<Violation> violations_;
};

class UnknownNodeError : public std::invalid_argument {
public:
    explicit UnknownNodeError(const NodeId& id)
        : std::invalid_argument("unknown node '" + id + "'"), id_(id) {}
    const NodeId& id() const noexcept { return id_; }

private:
    NodeId id_;
};

/// Checks every structural rule and reports all violations, never just the first.
std::vector<Violation> validate_graph(const std::vector<NodeSpec>& nodes,
                                      const std::vector<Edge>& edges);

/// Directed graph over baseline variables and counting processes.
///
/// Immutable once built. Nodes are kept sorted by id; `index_of` gives the
/// dense position used by the separation and simulation layers.
class LocalIndependenceGraph {
public:
    LocalIndependenceGraph() = default;

    const std::vector<NodeSpec>& nodes() const noexcept { return nodes_; }
    const std::vector<Edge>& edges() const noexcept { return edges_; }
    std::size_t size() const noexcept { return nodes_.size(); }

    bool contains(const NodeId& id) const { return index_.count(id) != 0; }
    std::size_t index_of(const NodeId& id) const;
    const NodeSpec& node(const NodeId& id) const { return nodes_[index_of(id)]; }
    const NodeSpec& node(std::size_t index) const { return nodes_.at(index); }
    NodeKind kind(const NodeId& id) const { return node(id).kind; }
    bool is_process(const NodeId& id) const { return kind(id) == NodeKind::Process; }
    bool has_role(const NodeId& id, Role role) const;
    bool has_edge(const NodeId& from, const NodeId& to) const;

    // index-level adjacency, sorted by target/source index
    const std::vector<std::size_t>& out_indices(std::size_t v) const { return out_.at(v); }
    const std::vector<std::size_t>& in_indices(std::size_t v) const { return in_.at(v); }

    NodeSet parents(const NodeId& v) const;
    NodeSet children(const NodeId& v) const;
    NodeSet ancestors(const NodeId& v) const;
    NodeSet descendants(const NodeId& v) const;

    /// Nodes carrying `role`, in id order.
    std::vector<NodeId> nodes_with_role(Role role) const;
    std::optional<NodeId> unique_role(Role role) const;

    friend bool operator==(const LocalIndependenceGraph& a, const LocalIndependenceGraph& b) {
        if (a.edges_ != b.edges_ || a.nodes_.size() != b.nodes_.size()) return false;
        for (std::size_t i = 0; i < a.nodes_.size(); ++i) {
            if (a.nodes_[i].id != b.nodes_[i].id || a.nodes_[i].kind != b.nodes_[i].kind ||
                a.nodes_[i].roles != b.nodes_[i].roles)
                return false;
        }
        return true;
    }

private:
    friend LocalIndependenceGraph build_graph(std::vector<NodeSpec>, std::vector<Edge>);

    std::vector<NodeSpec> nodes_;
    std::vector<Edge> edges_;
    std::map<NodeId, std::size_t> index_;
    std::vector<std::vector<std::size_t>> out_;
    std::vector<std::vector<std::size_t>> in_;
};

/// Throws GraphError listing every violated rule.
LocalIndependenceGraph build_graph(std::vector<NodeSpec> nodes, std::vector<Edge> edges);

LocalIndependenceGraph induced_subgraph(const LocalIndependenceGraph& graph, const NodeSet& keep);

/// Copy of `graph` with the role tags of `id` replaced.
LocalIndependenceGraph with_roles(const LocalIndependenceGraph& graph, const NodeId& id,
                                  std::set<Role> roles);

// Index-level reachability shared with the separation engine.
std::vector<bool> descendant_mask(const LocalIndependenceGraph& graph, std::size_t v);
std::vector<bool> ancestor_or_self_mask(const LocalIndependenceGraph& graph,
                                        const std::vector<bool>& seeds);

}  // namespace locind
