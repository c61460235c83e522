#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "locind/dataset.hpp"
#include "locind/graph.hpp"
#include "locind/rng.hpp"

namespace locind {

/// A predictable functional of one subject's history: intensities and ratio
/// processes both take this shape. `rate` sees only the strict past of the
/// declared dependencies (plus the owning process's own jumps).
struct PathFunctional {
    std::vector<NodeId> dependencies;
    std::function<double(const LocalView&)> rate;
    double bound = 0.0;      // rate <= bound everywhere on [0, horizon]
    std::string descriptor;  // canonical text, hashed for provenance

    static PathFunctional constant(double value, std::size_t max_jumps = SIZE_MAX);
};

struct BaselineContext {
    Rng& rng;
    std::size_t subject;
    std::size_t n_subjects;
    std::span<const double> parents;  // values of the sampler's declared parents
};

struct BaselineSampler {
    std::vector<NodeId> parents;
    std::function<double(BaselineContext&)> draw;
    std::string descriptor;
};

/// Restricts the baseline law to an event (boxed nodes in a graph drawing).
/// Applied by rejection; `accept` sees baseline values indexed by graph node.
struct BaselineCondition {
    std::function<bool(std::span<const double>)> accept;
    std::string descriptor;
};

struct SystemSpec {
    LocalIndependenceGraph graph;
    std::map<NodeId, BaselineSampler> baseline;
    std::map<NodeId, PathFunctional> intensities;
    std::optional<BaselineCondition> condition;
    double horizon = 1.0;
    std::string name;
};

class SpecError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class IllegalDependency : public SpecError {
public:
    using SpecError::SpecError;
};

class InvalidParams : public SpecError {
public:
    using SpecError::SpecError;
};

/// Rate evaluation failures carry the node and time at which they occurred.
class RateError : public std::runtime_error {
public:
    RateError(const std::string& what, NodeId node, double time)
        : std::runtime_error(what), node_(std::move(node)), time_(time) {}
    const NodeId& node() const noexcept { return node_; }
    double time() const noexcept { return time_; }

private:
    NodeId node_;
    double time_;
};

class BoundViolated : public RateError {
public:
    using RateError::RateError;
};
class NonFiniteRate : public RateError {
public:
    using RateError::RateError;
};
class NegativeRate : public RateError {
public:
    using RateError::RateError;
};

/// Checks that every process has an intensity reading only its parents and
/// itself, every baseline node a sampler reading only baseline parents, and
/// bounds and horizon are finite and positive.
void validate_spec(const SystemSpec& spec);

/// Per-component hashes (`baseline:<id>`, `intensity:<id>`, `condition`, `horizon`).
std::map<std::string, std::uint64_t> component_hashes(const SystemSpec& spec);
std::string spec_hash(const SystemSpec& spec);

struct SimulationOptions {
    unsigned threads = 1;
    std::size_t max_baseline_attempts = 100000;
};

struct SimulationLog {
    std::size_t tie_nudges = 0;         // candidate times moved by one ulp
    std::size_t baseline_rejections = 0;
};

/// n independent subjects sampled by thinning against the declared bounds,
/// resolving candidates in global time order. Bit-identical for a given
/// (spec, n, seed) at any thread count.
EventDataset simulate_system(const SystemSpec& spec, std::size_t n, std::uint64_t seed,
                             const SimulationOptions& options = {}, SimulationLog* log = nullptr);

/// Replaces the intensity of `target`. The new intensity may not read nodes tagged latent.
SystemSpec intervene(const SystemSpec& spec, const NodeId& target, PathFunctional new_intensity);

/// Multiplies the intensity of `target` by `rho`; `rho` may not read latent nodes.
SystemSpec intervene_multiplier(const SystemSpec& spec, const NodeId& target, PathFunctional rho);

/// A functional resolved against a dataset layout, for evaluation along
/// finished paths. Every evaluation is checked for finiteness, sign and bound.
class BoundFunctional {
public:
    BoundFunctional(const PathFunctional& fn, const EventDataset& data, const NodeId& self);

    double operator()(const SubjectPath& path, double t) const;
    const PathFunctional& functional() const noexcept { return *fn_; }
    std::size_t self() const noexcept { return self_; }

private:
    const PathFunctional* fn_;
    std::vector<std::size_t> deps_;
    std::size_t self_;
    NodeId name_;
};

// ---------------------------------------------------------------------------
// Three-node system with a binary latent U (odds gamma), N1 and N2 each jumping at most once.

double example_4_3_g(double t, double x, double gamma);
/// Hazard of N2 among subjects still at risk, marginal over U and N1.
double example_4_3_observed_hazard(double t, double gamma);
/// Same hazard after N1 is prevented.
double example_4_3_prevented_hazard(double t, double gamma);
SystemSpec builtin_example_4_3(double gamma, double horizon = 1.0);

// ---------------------------------------------------------------------------
// Screening-cohort scenario: two test-type groups, latent disease and
// progression, subsequent testing, detection of a lesion, and censoring.

struct HpvParams {
    std::size_t n_target = 878;      // TestType = 1
    std::size_t n_reference = 858;   // TestType = 0
    double prevalence = 0.15;        // P(latent disease)
    double sensitivity_target = 0.6; // P(positive HPV result | disease), per test type
    double sensitivity_reference = 0.9;
    double false_positive = 0.05;    // P(positive HPV result | no disease)
    double inconclusive_diseased = 0.6;  // P(inconclusive cytology | disease)
    double inconclusive_healthy = 0.3;
    double progression_rate = 0.3;
    double progression_boost = 1.0;  // relative detection increase after progression
    double test_rate_target = 1.2;   // subsequent-test intensity per group
    double test_rate_reference = 0.5;
    double detection_rate = 1.0;     // detection intensity for a tested, diseased subject
    double untested_fraction = 0.1;  // relative detection intensity before the subsequent test
    double censoring_rate = 0.1;
    double horizon = 5.0;

    /// No false-negative mechanism: equal sensitivities across test types.
    static HpvParams null_scenario();
    void validate() const;
};

/// Number of target-group subjects in a cohort of n.
std::size_t hpv_target_count(const HpvParams& params, std::size_t n);
LocalIndependenceGraph hpv_graph();
SystemSpec builtin_hpv_scenario(const HpvParams& params = {});

// ---------------------------------------------------------------------------

class EmptyRiskSet : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct HazardEstimate {
    std::vector<double> times;
    std::vector<double> hazard;
    std::vector<double> standard_error;
};

/// Epanechnikov-smoothed Nelson-Aalen increments of the first jump of `process`
/// among subjects still at risk (no earlier jump, not censored).
HazardEstimate estimate_marginal_hazard(const EventDataset& data, const NodeId& process, double bandwidth,
                                        const std::vector<double>& times);

}  // namespace locind
