#pragma once

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <string>
#include <utility>
#include <vector>

#include "locind/graph.hpp"
#include "locind/simulation.hpp"

namespace locind::fixtures {

inline NodeSpec proc(std::string id, std::set<Role> roles = {}) {
    return {std::move(id), NodeKind::Process, std::move(roles)};
}

inline NodeSpec base(std::string id, std::set<Role> roles = {}) {
    return {std::move(id), NodeKind::Baseline, std::move(roles)};
}

inline std::vector<Edge> edges(std::initializer_list<std::pair<const char*, const char*>> list) {
    std::vector<Edge> out;
    for (const auto& [f, t] : list) out.push_back({f, t});
    return out;
}

// Three processes with a feedback loop between N2 and N3.
inline LocalIndependenceGraph three_cycle() {
    return build_graph({proc("N1"), proc("N2"), proc("N3")},
                       edges({{"N1", "N3"}, {"N1", "N2"}, {"N2", "N3"}, {"N3", "N2"}, {"N3", "N1"}}));
}

// Treatment, outcome, censoring, one observed covariate process L and three latent processes.
inline LocalIndependenceGraph illustration(bool l_observed = true) {
    return build_graph(
        {proc("Nx", {Role::Treatment}), proc("Ny", {Role::Outcome}), proc("Nc", {Role::Censoring}),
         l_observed ? proc("L", {Role::Marginalize}) : proc("L", {Role::Latent}), proc("U1", {Role::Latent}),
         proc("U2", {Role::Latent}), proc("U3", {Role::Latent})},
        edges({{"Nx", "U2"}, {"Nx", "U1"}, {"Nx", "Ny"}, {"Nx", "L"}, {"Nx", "Nc"},
               {"U1", "Ny"}, {"U1", "L"},  {"U2", "Nx"}, {"L", "U2"},  {"L", "Ny"},
               {"L", "Nx"},  {"L", "Nc"},  {"L", "U1"},  {"Ny", "Nc"}, {"U3", "Nc"}}));
}

// Cervical screening: two test types, a latent lesion and a latent progression process.
inline LocalIndependenceGraph screening() {
    return build_graph({base("LatentDisease", {Role::Latent}), base("Cytology", {Role::BaselineKeep}),
                        base("TestType", {Role::BaselineKeep}), base("HPVResult", {Role::BaselineKeep}),
                        proc("Progression", {Role::Latent}), proc("Nx", {Role::Treatment}),
                        proc("Ny", {Role::Outcome}), proc("Nc", {Role::Censoring})},
                       edges({{"LatentDisease", "HPVResult"},
                              {"LatentDisease", "Cytology"},
                              {"LatentDisease", "Ny"},
                              {"LatentDisease", "Progression"},
                              {"Progression", "Ny"},
                              {"HPVResult", "Ny"},
                              {"HPVResult", "Nx"},
                              {"TestType", "Nx"},
                              {"TestType", "HPVResult"},
                              {"Nx", "Ny"},
                              {"Cytology", "Ny"},
                              {"Cytology", "Nx"},
                              {"Ny", "Nc"}}));
}

// Baseline confounder Z and mediator X between two processes.
inline LocalIndependenceGraph mediated(bool na_censoring = false) {
    return build_graph({base("Z"), base("X"), na_censoring ? proc("Na", {Role::Censoring}) : proc("Na"), proc("Nb")},
                       edges({{"Z", "X"}, {"Z", "Na"}, {"X", "Nb"}, {"X", "Na"}, {"Nb", "Na"}}));
}

// Three latent processes around a treatment N* and outcome Ny.
inline LocalIndependenceGraph three_latent() {
    return build_graph({proc("U1"), proc("U2"), proc("U3"), proc("N*"), proc("Ny")},
                       edges({{"U2", "N*"}, {"U2", "U1"}, {"U3", "U1"}, {"U3", "Ny"}, {"N*", "Ny"},
                              {"N*", "U2"}, {"N*", "U1"}, {"Ny", "N*"}, {"Ny", "U1"}, {"Ny", "U3"}}));
}

// Bivariate outcome (N1, N2) with one latent process.
inline LocalIndependenceGraph bivariate_outcome() {
    return build_graph({proc("N1"), proc("N2"), proc("N*"), proc("U")},
                       edges({{"N2", "N*"}, {"N2", "U"}, {"N2", "N1"}, {"U", "N1"}, {"U", "N2"}, {"N*", "N2"},
                              {"N*", "U"}, {"N*", "N1"}, {"N1", "N*"}, {"N1", "U"}, {"N1", "N2"}}));
}

// Two groups G = 1 (first half) and G = 0. Treatment X jumps at most once at
// rate alpha_target or alpha_reference; outcome Y at rate 0.5 + I(X jumped);
// censoring C at rate 0.2 until Y.
inline SystemSpec two_group_design(double alpha_target = 2.0, double alpha_reference = 1.0, double horizon = 1.0) {
    SystemSpec s;
    s.horizon = horizon;
    s.graph = build_graph({base("G", {Role::BaselineKeep}), proc("X", {Role::Treatment}),
                           proc("Y", {Role::Outcome}), proc("C", {Role::Censoring})},
                          edges({{"G", "X"}, {"X", "Y"}, {"Y", "C"}}));
    s.baseline["G"] = {{}, [](BaselineContext& c) { return c.subject < c.n_subjects / 2 ? 1.0 : 0.0; }, "half"};
    PathFunctional x;
    x.dependencies = {"G"};
    x.bound = std::max(alpha_target, alpha_reference);
    x.rate = [alpha_target, alpha_reference](const LocalView& v) {
        return v.own_count() ? 0.0 : v.value(0) == 1.0 ? alpha_target : alpha_reference;
    };
    x.descriptor = "x";
    s.intensities["X"] = x;
    PathFunctional y;
    y.dependencies = {"X"};
    y.bound = 1.5;
    y.rate = [](const LocalView& v) { return v.own_count() ? 0.0 : 0.5 + (v.count(0) ? 1.0 : 0.0); };
    y.descriptor = "y";
    s.intensities["Y"] = y;
    PathFunctional c;
    c.dependencies = {"Y"};
    c.bound = 0.2;
    c.rate = [](const LocalView& v) { return v.own_count() || v.count(0) ? 0.0 : 0.2; };
    c.descriptor = "c";
    s.intensities["C"] = c;
    return s;
}

// Interventional survival of Y when X follows rate a from time 0: with outcome
// rates 0.5 before and 1.5 after X, S(t) = e^{-(a+0.5)t} + a e^{-1.5t}(1 - e^{-(a-1)t})/(a-1).
inline double two_group_survival(double a, double t) {
    if (a == 1.0) return std::exp(-1.5 * t) * (1.0 + t);
    return std::exp(-(a + 0.5) * t) + a * std::exp(-1.5 * t) * (1.0 - std::exp(-(a - 1.0) * t)) / (a - 1.0);
}

}  // namespace locind::fixtures
