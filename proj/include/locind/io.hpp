#pragma once

#include <nlohmann/json.hpp>

#include <map>
#include <string>
#include <vector>

#include "locind/dataset.hpp"
#include "locind/estimation.hpp"
#include "locind/simulation.hpp"
#include "locind/weighting.hpp"

namespace locind {

// Dataset directory layout:
//   events.csv     subject_id,node_id,event_time  (censoring is a jump of the censoring node)
//   baseline.csv   subject_id,node_id,value
//   metadata.json  nodes, censoring node, horizon, seed, spec hash, subject ids
void write_dataset(const EventDataset& data, const std::string& dir);
EventDataset read_dataset(const std::string& dir);

/// Dataset from bare CSV files laid out by `graph`. Subjects are the ids seen
/// in either file. Records after the horizon are dropped.
EventDataset read_dataset_csv(const std::string& events_csv, const std::string& baseline_csv,
                              const LocalIndependenceGraph& graph, double horizon);

/// Orders subjects by id, numerically when both ids are integers.
void sort_subjects(EventDataset& data);
bool subject_id_less(const std::string& a, const std::string& b);

/// Spec documents:
///   {"horizon": T, "graph": {...} | "graph_file": path, "baseline": {...}, "intensities": {...},
///    "condition": {node: value}, "interventions": [{"target": id, "intensity" | "multiplier": {...}}]}
///   {"builtin": "builtin_4_3", "gamma": g, "horizon": T}
///   {"builtin": "builtin_hpv", "params": {...}, "interventions": [...]}
/// Intensity families: constant, piecewise_constant, loglinear. Baseline
/// families: bernoulli, categorical, normal, constant. `base_dir` resolves graph_file.
SystemSpec parse_spec(const nlohmann::json& doc, const std::string& base_dir = ".");
SystemSpec load_spec_file(const std::string& path);
PathFunctional parse_intensity(const nlohmann::json& doc, const NodeId& owner);
HpvParams parse_hpv_params(const nlohmann::json& doc);

/// `subject_id,time,weight,flag`; flag is 1 from a subject's treatment time on
/// when its jump factor used the zero-denominator policy.
void write_weights_csv(const std::string& path, const std::vector<std::string>& ids,
                       const std::vector<WeightTrajectory>& weights, const std::vector<char>& flags = {},
                       const std::vector<double>& flag_from = {});
/// Per subject id, the trajectory through the listed values (log-linear between rows).
std::map<std::string, WeightTrajectory> read_weights_csv(const std::string& path);

/// `time,value`.
void write_curve_csv(const std::string& path, const StepCurve& curve);
/// `time,value,lower,upper`.
void write_band_csv(const std::string& path, const ContrastBand& band);
StepCurve read_curve_csv(const std::string& path);

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

/// Input that cannot be read or parsed (missing files, bad CSV rows).
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace locind
