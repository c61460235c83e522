#pragma once

#include <nlohmann/json.hpp>

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "locind/graph.hpp"

namespace locind {

/// A trail: distinct vertices v0..vm joined by edges in either orientation.
struct Trail {
    std::vector<NodeId> vertices;
    std::vector<Edge> edges;  // edges[j] joins vertices[j] and vertices[j+1]

    std::size_t length() const noexcept { return edges.size(); }
    /// e.g. "N2 -> N3 <- N1"
    std::string to_string() const;

    friend bool operator==(const Trail&, const Trail&) = default;
};

class LimitExceeded : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidQuery : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct TrailOptions {
    std::optional<std::size_t> max_len;  // maximum number of edges
    std::size_t cap = 1'000'000;         // maximum number of trails returned
};

/// All trails from `b` to `a` whose final edge points into `a`, ordered
/// lexicographically by vertex sequence, then by edge orientation.
std::vector<Trail> enumerate_allowed_trails(const LocalIndependenceGraph& graph, const NodeId& b,
                                            const NodeId& a, const TrailOptions& options = {});

bool is_blocked(const LocalIndependenceGraph& graph, const Trail& trail, const NodeSet& conditioning);

/// B, A, C of a separation statement `B -/-> A | A u C`.
struct SeparationQuery {
    NodeSet sources;
    NodeSet targets;
    NodeSet conditioning;
};

void validate_query(const LocalIndependenceGraph& graph, const SeparationQuery& query);

struct SeparationResult {
    bool separated = true;
    std::optional<Trail> witness;  // first open allowed trail in canonical order
};

/// Reference implementation: enumerates allowed trails per (b, a) pair.
SeparationResult delta_separated(const LocalIndependenceGraph& graph, const SeparationQuery& query,
                                 const TrailOptions& options = {});

/// Reachability search over (vertex, arrival-orientation) states. Same verdict
/// as the reference, without witnesses and without trail enumeration.
bool delta_separated_fast(const LocalIndependenceGraph& graph, const SeparationQuery& query);

enum class SeparationEngine { Reference, Reachability };

// ---------------------------------------------------------------------------
// Eliminability

enum class BlockCondition {
    OutcomeSide,    // block -/-> outcome processes | (V0, later blocks)
    TreatmentSide,  // block -/-> treatment        | (V0, later blocks)
};

std::string to_string(BlockCondition c);

struct EliminationBlock {
    NodeSet members;
    BlockCondition condition = BlockCondition::OutcomeSide;
};

struct EliminabilityWitness {
    std::vector<EliminationBlock> blocks;  // U_1 .. U_K
    bool heuristic = false;                // found by the singleton search beyond the exhaustive limit
};

class HeuristicInconclusive : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct EliminabilityOptions {
    std::size_t exhaustive_limit = 6;
    SeparationEngine engine = SeparationEngine::Reachability;
};

/// Searches ordered partitions of `latent` (exhaustively up to the limit,
/// singleton orderings with backtracking beyond it). `v0_rest` is the observed
/// set without the treatment; its process members are the outcomes.
std::optional<EliminabilityWitness> eliminable(const LocalIndependenceGraph& graph, const NodeSet& latent,
                                               const NodeId& treatment, const NodeSet& v0_rest,
                                               const EliminabilityOptions& options = {});

/// Checks one given ordered partition; returns the per-block tags or nullopt.
std::optional<EliminabilityWitness> check_elimination_order(
    const LocalIndependenceGraph& graph, const std::vector<NodeSet>& blocks, const NodeId& treatment,
    const NodeSet& v0_rest, SeparationEngine engine = SeparationEngine::Reference);

// ---------------------------------------------------------------------------
// Censoring and the identification verdict

enum class CensoringScope { WholeModel, Submodel, Conditional };

class NoCensoringNode : public std::invalid_argument {
public:
    NoCensoringNode() : std::invalid_argument("graph has no node tagged censoring") {}
};

class MissingRole : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// whole_model: N^c is childless. submodel: N^c -/-> processes of A u B | A u B.
/// conditional: N^c -/-> A | A u B.
bool check_independent_censoring(const LocalIndependenceGraph& graph, const NodeSet& a, const NodeSet& b,
                                 CensoringScope scope);

struct RoleAssignment {
    NodeId treatment;
    NodeId censoring;
    NodeSet outcomes;
    NodeSet baseline_keep;  // B0
    NodeSet marginalize;    // L
    NodeSet latent;         // U (explicit latent tags and untagged nodes)

    NodeSet observed() const;  // V0 = {treatment} u outcomes u baseline_keep
};

RoleAssignment resolve_roles(const LocalIndependenceGraph& graph);

struct IdentifiabilityReport {
    RoleAssignment roles;
    bool censoring_independent_full_model = false;
    NodeSet censoring_children;

    bool condition_i = false;
    std::optional<Trail> condition_i_witness;
    std::string condition_i_note;

    bool condition_ii = false;
    std::optional<EliminabilityWitness> condition_ii_witness;
    std::string condition_ii_note;

    bool overall = false;

    // Node sets generating the filtrations of the intensities in the combined weights.
    NodeSet censoring_intensity_filtration;     // V0 u L u {N^c}
    NodeSet treatment_intensity_filtration;     // V0 u L u {N^c}
    NodeSet censoring_intervention_filtration;  // V0 u {N^c}
    NodeSet treatment_intervention_filtration;  // V0
};

IdentifiabilityReport check_theorem1(const LocalIndependenceGraph& graph,
                                     const EliminabilityOptions& options = {});

/// Experimental: smallest subset L of the latent/untagged candidates such that
/// re-tagging L as `marginalize` makes the verdict pass. Brute force, at most
/// `max_candidates` candidates.
std::optional<NodeSet> search_sufficient_observables(const LocalIndependenceGraph& graph,
                                                     std::size_t max_candidates = 12);

nlohmann::json to_json(const Trail& trail);
nlohmann::json to_json(const EliminabilityWitness& witness);
nlohmann::json to_json(const IdentifiabilityReport& report);

}  // namespace locind
