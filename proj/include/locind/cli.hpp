#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "locind/estimation.hpp"
#include "locind/graph.hpp"
#include "locind/simulation.hpp"
#include "locind/weighting.hpp"

namespace locind::cli {

enum ExitCode : int { kSuccess = 0, kNegative = 1, kInputError = 2, kEstimationError = 3 };

/// `validate`: 0 when the graph satisfies every structural rule, 1 with a
/// violation report otherwise.
int cmd_validate(const std::string& graph_file, std::ostream& out);

struct QueryOptions {
    std::string kind = "delta_sep";  // delta_sep, eliminable, theorem1
    std::vector<NodeId> sources, targets, conditioning;
    std::vector<NodeId> latent, observed;
    NodeId treatment;
    std::vector<std::vector<NodeId>> order;  // blocks of a proposed elimination order
    bool fast = false;                       // reachability engine, no witness
    std::optional<std::size_t> max_len;
};

/// `query`: exit 0 for a positive verdict (separated, eliminable, identified), 1 otherwise.
int cmd_query(const std::string& graph_file, const QueryOptions& options, std::ostream& out);

/// Role overrides of the form `node=role[+role...]`; an empty role list clears the tags.
LocalIndependenceGraph apply_role_overrides(const LocalIndependenceGraph& graph,
                                            const std::map<NodeId, std::set<Role>>& overrides);
std::map<NodeId, std::set<Role>> parse_role_overrides(const std::vector<std::string>& items);

/// `identify`: report on stdout, exit 0 iff the effect is identified.
int cmd_identify(const std::string& graph_file, const std::map<NodeId, std::set<Role>>& overrides,
                 std::ostream& out);

/// `simulate`: dataset directory from a spec file.
int cmd_simulate(const std::string& spec_file, std::size_t n, std::uint64_t seed, const std::string& out_dir,
                 unsigned threads, std::ostream& out);

struct WeightsOptions {
    NodeId group_node;
    double target_value = 1.0;
    double reference_value = 0.0;
    NodeId treatment;
    std::optional<double> bandwidth;
    double truncation_quantile = 0.0;
    std::optional<std::string> spec_file;  // exact weights from the generating intensities
};

/// `weights`: weights.csv and weights_diagnostics.json in `out_dir`.
int cmd_weights(const std::string& data_dir, const WeightsOptions& options, const std::string& out_dir,
                unsigned threads, std::ostream& out);

struct EstimateOptions {
    NodeId outcome;
    std::optional<std::string> weights_file;
    std::optional<NodeId> group_node;
    double group_value = 1.0;
    bool svg = false;
};

/// `estimate`: survival.csv, incidence.csv and km_diagnostics.json in `out_dir`.
int cmd_estimate(const std::string& data_dir, const EstimateOptions& options, const std::string& out_dir,
                 std::ostream& out);

// ---------------------------------------------------------------------------

enum class WeightMode { Theta, Exact };

struct AnalysisConfig {
    std::optional<std::string> graph_file;
    std::optional<nlohmann::json> spec;  // inline spec document
    std::string spec_dir = ".";          // resolves paths inside the spec
    std::size_t n = 0;                   // subjects to simulate
    std::optional<std::string> data_dir;
    std::optional<std::string> events_csv, baseline_csv;
    std::optional<double> horizon;
    std::map<NodeId, std::set<Role>> roles;
    NodeId group_node;
    double target_value = 1.0;
    double reference_value = 0.0;
    std::optional<NodeId> treatment, outcome;
    std::optional<double> bandwidth;
    double truncation_quantile = 0.0;
    std::optional<WeightMode> weights;
    std::size_t replicates = 400;
    double level = 0.95;
    std::size_t max_grid = 512;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    bool svg = false;
    bool force = false;
};

/// Relative paths resolve against `base_dir`.
AnalysisConfig parse_analysis_config(const nlohmann::json& doc, const std::string& base_dir = ".");
AnalysisConfig load_analysis_config(const std::string& path);

/// identify, simulate or read data, weight, estimate, bootstrap; writes curve
/// CSVs, the band CSV, diagnostics.json, identify.json and optional SVGs.
int cmd_analyze(const AnalysisConfig& config, unsigned threads, std::ostream& out, std::ostream& err);

/// Per-subject exact weights that give target subjects the treatment intensity
/// they would have with `group_node` set to `reference_value`. Other subjects get 1.
std::vector<WeightTrajectory> exact_group_weights(const SystemSpec& spec, const EventDataset& data,
                                                  const NodeId& group_node, double target_value,
                                                  double reference_value, const NodeId& treatment,
                                                  unsigned threads);

/// Parses arguments and dispatches; returns the exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace locind::cli
