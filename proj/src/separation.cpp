#include "locind/separation.hpp"

#include <algorithm>
#include <cstdint>
#include <functional>
#include <unordered_set>

namespace locind {

std::string Trail::to_string() const {
    if (vertices.empty()) return {};
    std::string out = vertices.front();
    for (std::size_t j = 0; j < edges.size(); ++j) {
        out += edges[j].to == vertices[j + 1] ? " -> " : " <- ";
        out += vertices[j + 1];
    }
    return out;
}

std::string to_string(BlockCondition c) {
    return c == BlockCondition::OutcomeSide ? "outcome_side" : "treatment_side";
}

namespace {

struct TrailOrder {
    bool operator()(const Trail& x, const Trail& y) const {
        if (x.vertices != y.vertices) return x.vertices < y.vertices;
        // forward (v_{j-1} -> v_j) sorts before backward
        for (std::size_t j = 0; j < x.edges.size(); ++j) {
            const bool fx = x.edges[j].to == x.vertices[j + 1];
            const bool fy = y.edges[j].to == y.vertices[j + 1];
            if (fx != fy) return fx;
        }
        return false;
    }
};

std::vector<bool> mask_of(const LocalIndependenceGraph& g, const NodeSet& set) {
    std::vector<bool> m(g.size(), false);
    for (const auto& id : set) m[g.index_of(id)] = true;
    return m;
}

}  // namespace

std::vector<Trail> enumerate_allowed_trails(const LocalIndependenceGraph& graph, const NodeId& b,
                                            const NodeId& a, const TrailOptions& options) {
    const std::size_t src = graph.index_of(b);
    const std::size_t dst = graph.index_of(a);
    if (!graph.is_process(a)) throw InvalidQuery("target '" + a + "' is not a process");
    if (src == dst) throw InvalidQuery("source and target coincide ('" + a + "')");

    const std::size_t max_len = options.max_len.value_or(graph.size());
    const std::size_t work_cap = options.cap * 64 + 4096;
    std::size_t work = 0;

    std::vector<Trail> out;
    std::vector<bool> on_trail(graph.size(), false);
    std::vector<std::size_t> verts{src};
    std::vector<bool> forward;  // orientation of each edge
    on_trail[src] = true;

    auto emit = [&] {
        Trail t;
        for (std::size_t v : verts) t.vertices.push_back(graph.node(v).id);
        for (std::size_t j = 0; j < forward.size(); ++j) {
            const auto& u = t.vertices[j];
            const auto& w = t.vertices[j + 1];
            t.edges.push_back(forward[j] ? Edge{u, w} : Edge{w, u});
        }
        out.push_back(std::move(t));
        if (out.size() > options.cap)
            throw LimitExceeded("more than " + std::to_string(options.cap) + " allowed trails from '" + b +
                                "' to '" + a + "'");
    };

    std::function<void(std::size_t)> extend = [&](std::size_t v) {
        if (++work > work_cap) throw LimitExceeded("trail enumeration from '" + b + "' to '" + a + "' too large");
        if (forward.size() >= max_len) return;
        auto step = [&](std::size_t w, bool fwd) {
            if (w == dst) {
                if (fwd) {
                    verts.push_back(w);
                    forward.push_back(true);
                    emit();
                    verts.pop_back();
                    forward.pop_back();
                }
                return;
            }
            if (on_trail[w]) return;
            on_trail[w] = true;
            verts.push_back(w);
            forward.push_back(fwd);
            extend(w);
            verts.pop_back();
            forward.pop_back();
            on_trail[w] = false;
        };
        for (std::size_t w : graph.out_indices(v)) step(w, true);
        for (std::size_t w : graph.in_indices(v)) step(w, false);
    };
    extend(src);
    std::sort(out.begin(), out.end(), TrailOrder{});
    return out;
}

bool is_blocked(const LocalIndependenceGraph& graph, const Trail& trail, const NodeSet& conditioning) {
    const std::size_t m = trail.edges.size();
    for (std::size_t j = 1; j < m; ++j) {
        const NodeId& v = trail.vertices[j];
        const bool collider = trail.edges[j - 1].to == v && trail.edges[j].to == v;
        if (!collider) {
            if (conditioning.count(v)) return true;
        } else {
            if (conditioning.count(v)) continue;
            const NodeSet desc = graph.descendants(v);
            const bool activated =
                std::any_of(desc.begin(), desc.end(), [&](const NodeId& d) { return conditioning.count(d) != 0; });
            if (!activated) return true;
        }
    }
    return false;
}

void validate_query(const LocalIndependenceGraph& graph, const SeparationQuery& q) {
    for (const auto* set : {&q.sources, &q.targets, &q.conditioning})
        for (const auto& id : *set) graph.index_of(id);
    if (q.targets.empty()) throw InvalidQuery("target set A is empty");
    for (const auto& a : q.targets)
        if (!graph.is_process(a)) throw InvalidQuery("target '" + a + "' is not a process");
    for (const auto& b : q.sources)
        if (q.targets.count(b) || q.conditioning.count(b))
            throw InvalidQuery("source '" + b + "' also appears in A or C");
}

namespace {

NodeSet conditioning_for(const SeparationQuery& q, const NodeId& a) {
    NodeSet c = q.conditioning;
    c.insert(q.targets.begin(), q.targets.end());
    c.erase(a);
    return c;
}

}  // namespace

SeparationResult delta_separated(const LocalIndependenceGraph& graph, const SeparationQuery& query,
                                 const TrailOptions& options) {
    validate_query(graph, query);
    for (const auto& b : query.sources) {
        for (const auto& a : query.targets) {
            const NodeSet c = conditioning_for(query, a);
            for (auto& trail : enumerate_allowed_trails(graph, b, a, options))
                if (!is_blocked(graph, trail, c)) return {false, std::move(trail)};
        }
    }
    return {true, std::nullopt};
}

namespace {

// Is there an open allowed trail from any source to `target` given `cond`?
bool connected(const LocalIndependenceGraph& g, const std::vector<bool>& sources, std::size_t target,
               const std::vector<bool>& cond) {
    const std::size_t n = g.size();
    const std::vector<bool> activating = ancestor_or_self_mask(g, cond);
    // state index: 2*v + (arrived with arrowhead at v ? 1 : 0)
    std::vector<bool> seen(2 * n, false);
    std::vector<std::size_t> stack;
    auto push = [&](std::size_t w, bool into) {
        const std::size_t s = 2 * w + (into ? 1 : 0);
        if (!seen[s]) {
            seen[s] = true;
            stack.push_back(s);
        }
    };
    for (std::size_t b = 0; b < n; ++b) {
        if (!sources[b]) continue;
        for (std::size_t w : g.out_indices(b)) {
            if (w == target) return true;
            push(w, true);
        }
        for (std::size_t w : g.in_indices(b))
            if (w != target) push(w, false);
    }
    while (!stack.empty()) {
        const std::size_t s = stack.back();
        stack.pop_back();
        const std::size_t v = s / 2;
        const bool into = s % 2 == 1;
        if (!cond[v]) {
            for (std::size_t w : g.out_indices(v)) {
                if (w == target) return true;
                push(w, true);
            }
        }
        // leaving against an edge w -> v: v is a collider iff it was entered with an arrowhead
        const bool may_leave_backward = into ? activating[v] : !cond[v];
        if (may_leave_backward) {
            for (std::size_t w : g.in_indices(v))
                if (w != target) push(w, false);
        }
    }
    return false;
}

}  // namespace

bool delta_separated_fast(const LocalIndependenceGraph& graph, const SeparationQuery& query) {
    validate_query(graph, query);
    const auto sources = mask_of(graph, query.sources);
    for (const auto& a : query.targets) {
        const auto cond = mask_of(graph, conditioning_for(query, a));
        if (connected(graph, sources, graph.index_of(a), cond)) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------

namespace {

bool separated(const LocalIndependenceGraph& g, const SeparationQuery& q, SeparationEngine engine) {
    if (q.targets.empty() || q.sources.empty()) return true;
    return engine == SeparationEngine::Reachability ? delta_separated_fast(g, q) : delta_separated(g, q).separated;
}

class BlockChecker {
public:
    BlockChecker(const LocalIndependenceGraph& g, const NodeId& x, const NodeSet& v0_rest, SeparationEngine engine)
        : g_(g), x_(x), engine_(engine) {
        if (!g.is_process(x)) throw InvalidQuery("treatment '" + x + "' is not a process");
        v0_ = v0_rest;
        v0_.insert(x);
        for (const auto& v : v0_rest) {
            g.index_of(v);
            if (g.is_process(v)) outcomes_.insert(v);
        }
    }

    // Condition met by `block` when `later` holds the union of all later blocks.
    std::optional<BlockCondition> operator()(const NodeSet& block, const NodeSet& later) const {
        NodeSet base = v0_;
        base.insert(later.begin(), later.end());

        SeparationQuery outcome_side{block, outcomes_, {}};
        for (const auto& v : base)
            if (!outcomes_.count(v)) outcome_side.conditioning.insert(v);
        if (separated(g_, outcome_side, engine_)) return BlockCondition::OutcomeSide;

        SeparationQuery treatment_side{block, {x_}, base};
        treatment_side.conditioning.erase(x_);
        if (separated(g_, treatment_side, engine_)) return BlockCondition::TreatmentSide;
        return std::nullopt;
    }

private:
    const LocalIndependenceGraph& g_;
    NodeId x_;
    NodeSet v0_;
    NodeSet outcomes_;
    SeparationEngine engine_;
};

void check_disjoint(const LocalIndependenceGraph& g, const NodeSet& latent, const NodeId& x, const NodeSet& v0_rest) {
    g.index_of(x);
    for (const auto& u : latent) {
        g.index_of(u);
        if (u == x || v0_rest.count(u)) throw InvalidQuery("latent node '" + u + "' overlaps the observed set");
    }
    if (v0_rest.count(x)) throw InvalidQuery("treatment '" + x + "' listed in the observed remainder");
}

NodeSet members(const std::vector<NodeId>& ids, std::uint64_t mask) {
    NodeSet out;
    for (std::size_t i = 0; i < ids.size(); ++i)
        if (mask >> i & 1U) out.insert(ids[i]);
    return out;
}

// Non-empty submasks of `set`, larger blocks first, then lexicographic by member ids.
std::vector<std::uint64_t> ordered_submasks(std::uint64_t set, std::size_t width) {
    std::vector<std::uint64_t> subs;
    for (std::uint64_t s = set; s; s = (s - 1) & set) subs.push_back(s);
    auto key = [width](std::uint64_t m) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < width; ++i)
            if (m >> i & 1U) idx.push_back(i);
        return idx;
    };
    std::sort(subs.begin(), subs.end(), [&](std::uint64_t a, std::uint64_t b) {
        const int pa = __builtin_popcountll(a), pb = __builtin_popcountll(b);
        if (pa != pb) return pa > pb;
        return key(a) < key(b);
    });
    return subs;
}

}  // namespace

std::optional<EliminabilityWitness> check_elimination_order(const LocalIndependenceGraph& graph,
                                                            const std::vector<NodeSet>& blocks,
                                                            const NodeId& treatment, const NodeSet& v0_rest,
                                                            SeparationEngine engine) {
    NodeSet all;
    for (const auto& b : blocks) {
        if (b.empty()) throw InvalidQuery("elimination block is empty");
        for (const auto& u : b)
            if (!all.insert(u).second) throw InvalidQuery("node '" + u + "' appears in two blocks");
    }
    check_disjoint(graph, all, treatment, v0_rest);
    const BlockChecker check(graph, treatment, v0_rest, engine);
    EliminabilityWitness w;
    NodeSet later;
    std::vector<EliminationBlock> reversed;
    for (auto it = blocks.rbegin(); it != blocks.rend(); ++it) {
        const auto cond = check(*it, later);
        if (!cond) return std::nullopt;
        reversed.push_back({*it, *cond});
        later.insert(it->begin(), it->end());
    }
    w.blocks.assign(reversed.rbegin(), reversed.rend());
    return w;
}

std::optional<EliminabilityWitness> eliminable(const LocalIndependenceGraph& graph, const NodeSet& latent,
                                               const NodeId& treatment, const NodeSet& v0_rest,
                                               const EliminabilityOptions& options) {
    check_disjoint(graph, latent, treatment, v0_rest);
    if (latent.empty()) return EliminabilityWitness{};
    if (latent.size() > 63) throw LimitExceeded("eliminability search supports at most 63 latent nodes");

    const BlockChecker check(graph, treatment, v0_rest, options.engine);
    const std::vector<NodeId> ids(latent.begin(), latent.end());
    const std::size_t width = ids.size();
    const bool exhaustive = width <= options.exhaustive_limit;

    std::unordered_set<std::uint64_t> dead;
    std::vector<EliminationBlock> chosen;

    // `remaining` = U_k u U_{k+1} u ... ; choose U_k, recurse on the rest.
    std::function<bool(std::uint64_t)> search = [&](std::uint64_t remaining) -> bool {
        if (remaining == 0) return true;
        if (dead.count(remaining)) return false;
        std::vector<std::uint64_t> candidates;
        if (exhaustive) {
            candidates = ordered_submasks(remaining, width);
        } else {
            for (std::size_t i = 0; i < width; ++i)
                if (remaining >> i & 1U) candidates.push_back(std::uint64_t{1} << i);
        }
        for (std::uint64_t block : candidates) {
            const std::uint64_t rest = remaining & ~block;
            const auto cond = check(members(ids, block), members(ids, rest));
            if (!cond) continue;
            chosen.push_back({members(ids, block), *cond});
            if (search(rest)) return true;
            chosen.pop_back();
        }
        dead.insert(remaining);
        return false;
    };

    const std::uint64_t all = width == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << width) - 1;
    if (search(all)) return EliminabilityWitness{chosen, !exhaustive};
    if (!exhaustive)
        throw HeuristicInconclusive("singleton search found no elimination order for " + std::to_string(width) +
                                    " latent nodes; this does not prove non-eliminability");
    return std::nullopt;
}

// ---------------------------------------------------------------------------

bool check_independent_censoring(const LocalIndependenceGraph& graph, const NodeSet& a, const NodeSet& b,
                                 CensoringScope scope) {
    const auto censoring = graph.unique_role(Role::Censoring);
    if (!censoring) throw NoCensoringNode();
    const NodeId& nc = *censoring;
    switch (scope) {
        case CensoringScope::WholeModel:
            return graph.children(nc).empty();
        case CensoringScope::Submodel: {
            NodeSet ab = a;
            ab.insert(b.begin(), b.end());
            ab.erase(nc);
            SeparationQuery q{{nc}, {}, {}};
            for (const auto& v : ab) (graph.is_process(v) ? q.targets : q.conditioning).insert(v);
            return separated(graph, q, SeparationEngine::Reference);
        }
        case CensoringScope::Conditional: {
            SeparationQuery q{{nc}, a, b};
            for (const auto& v : a) q.conditioning.erase(v);
            return separated(graph, q, SeparationEngine::Reference);
        }
    }
    return false;
}

NodeSet RoleAssignment::observed() const {
    NodeSet v0 = outcomes;
    v0.insert(treatment);
    v0.insert(baseline_keep.begin(), baseline_keep.end());
    return v0;
}

RoleAssignment resolve_roles(const LocalIndependenceGraph& graph) {
    RoleAssignment r;
    const auto x = graph.unique_role(Role::Treatment);
    const auto c = graph.unique_role(Role::Censoring);
    if (!x) throw MissingRole("no node tagged treatment");
    if (!c) throw MissingRole("no node tagged censoring");
    r.treatment = *x;
    r.censoring = *c;
    for (const auto& n : graph.nodes()) {
        if (n.id == r.treatment || n.id == r.censoring) continue;
        if (n.roles.count(Role::Outcome))
            r.outcomes.insert(n.id);
        else if (n.roles.count(Role::BaselineKeep))
            r.baseline_keep.insert(n.id);
        else if (n.roles.count(Role::Marginalize))
            r.marginalize.insert(n.id);
        else
            r.latent.insert(n.id);
    }
    if (r.outcomes.empty()) throw MissingRole("no node tagged outcome");
    return r;
}

IdentifiabilityReport check_theorem1(const LocalIndependenceGraph& graph, const EliminabilityOptions& options) {
    IdentifiabilityReport rep;
    rep.roles = resolve_roles(graph);
    const auto& r = rep.roles;
    const NodeSet v0 = r.observed();
    NodeSet v0_l = v0;
    v0_l.insert(r.marginalize.begin(), r.marginalize.end());

    rep.censoring_children = graph.children(r.censoring);
    rep.censoring_independent_full_model = rep.censoring_children.empty();

    SeparationQuery qi{{r.censoring}, {}, {}};
    for (const auto& v : v0_l) (graph.is_process(v) ? qi.targets : qi.conditioning).insert(v);
    rep.condition_i = delta_separated_fast(graph, qi);
    if (!rep.condition_i) {
        try {
            rep.condition_i_witness = delta_separated(graph, qi).witness;
        } catch (const LimitExceeded& e) {
            rep.condition_i_note = std::string("witness omitted: ") + e.what();
        }
    }

    NodeSet rest = v0_l;
    rest.erase(r.treatment);
    try {
        rep.condition_ii_witness = eliminable(graph, r.latent, r.treatment, rest, options);
        rep.condition_ii = rep.condition_ii_witness.has_value();
        if (!rep.condition_ii) rep.condition_ii_note = "no ordered partition of the latent set satisfies eliminability";
    } catch (const HeuristicInconclusive& e) {
        rep.condition_ii = false;
        rep.condition_ii_note = e.what();
    }

    rep.overall = rep.censoring_independent_full_model && rep.condition_i && rep.condition_ii;

    rep.censoring_intensity_filtration = v0_l;
    rep.censoring_intensity_filtration.insert(r.censoring);
    rep.treatment_intensity_filtration = rep.censoring_intensity_filtration;
    rep.censoring_intervention_filtration = v0;
    rep.censoring_intervention_filtration.insert(r.censoring);
    rep.treatment_intervention_filtration = v0;
    return rep;
}

std::optional<NodeSet> search_sufficient_observables(const LocalIndependenceGraph& graph,
                                                     std::size_t max_candidates) {
    const RoleAssignment base = resolve_roles(graph);
    const std::vector<NodeId> candidates(base.latent.begin(), base.latent.end());
    if (candidates.size() > max_candidates)
        throw LimitExceeded("too many candidate nodes for subset search (" + std::to_string(candidates.size()) + ")");
    const std::size_t n = candidates.size();
    std::vector<std::uint64_t> masks;
    for (std::uint64_t m = 0; m < (std::uint64_t{1} << n); ++m) masks.push_back(m);
    std::stable_sort(masks.begin(), masks.end(), [](std::uint64_t a, std::uint64_t b) {
        return __builtin_popcountll(a) < __builtin_popcountll(b);
    });
    for (std::uint64_t m : masks) {
        LocalIndependenceGraph g = graph;
        const NodeSet chosen = members(candidates, m);
        for (const auto& id : chosen) g = with_roles(g, id, {Role::Marginalize});
        if (check_theorem1(g).overall) return chosen;
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------

nlohmann::json to_json(const Trail& trail) {
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& e : trail.edges) edges.push_back({{"from", e.from}, {"to", e.to}});
    return {{"vertices", trail.vertices}, {"edges", edges}, {"text", trail.to_string()}};
}

nlohmann::json to_json(const EliminabilityWitness& witness) {
    nlohmann::json blocks = nlohmann::json::array();
    for (const auto& b : witness.blocks)
        blocks.push_back({{"members", b.members}, {"condition", to_string(b.condition)}});
    return {{"blocks", blocks}, {"heuristic", witness.heuristic}};
}

nlohmann::json to_json(const IdentifiabilityReport& rep) {
    const auto& r = rep.roles;
    nlohmann::json out;
    out["roles"] = {{"treatment", r.treatment},          {"censoring", r.censoring},
                    {"outcomes", r.outcomes},            {"baseline_keep", r.baseline_keep},
                    {"marginalize", r.marginalize},      {"latent", r.latent}};
    out["censoring_independent_full_model"] = rep.censoring_independent_full_model;
    out["censoring_children"] = rep.censoring_children;
    nlohmann::json ci = {{"holds", rep.condition_i}};
    if (rep.condition_i_witness) ci["witness"] = to_json(*rep.condition_i_witness);
    if (!rep.condition_i_note.empty()) ci["note"] = rep.condition_i_note;
    out["condition_i"] = ci;
    nlohmann::json cii = {{"holds", rep.condition_ii}};
    if (rep.condition_ii_witness) cii["witness"] = to_json(*rep.condition_ii_witness);
    if (!rep.condition_ii_note.empty()) cii["note"] = rep.condition_ii_note;
    out["condition_ii"] = cii;
    out["overall"] = rep.overall;
    out["required_weight_filtrations"] = {
        {"censoring_intensity", rep.censoring_intensity_filtration},
        {"treatment_intensity", rep.treatment_intensity_filtration},
        {"censoring_intervention", rep.censoring_intervention_filtration},
        {"treatment_intervention", rep.treatment_intervention_filtration},
    };
    return out;
}

}  // namespace locind
