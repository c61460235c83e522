#pragma once

#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "locind/dataset.hpp"
#include "locind/weighting.hpp"

namespace locind {

/// Right-continuous step function; times.front() is the start of follow-up
/// and value(t) before it equals values.front().
struct StepCurve {
    std::vector<double> times;
    std::vector<double> values;

    double value(double t) const;
    static StepCurve constant(double value, double start = 0.0);
};

class ZeroWeightedRiskSet : public std::runtime_error {
public:
    ZeroWeightedRiskSet(const std::string& what, double time) : std::runtime_error(what), time_(time) {}
    double time() const noexcept { return time_; }

private:
    double time_;
};

struct KaplanMeierDiagnostics {
    std::size_t clipped = 0;      // factors below 0 set to 0
    std::size_t tied_times = 0;   // event times shared by several subjects
    std::size_t event_times = 0;
    double min_risk_weight = 0.0; // smallest weighted risk set over event times
};

/// W^i_{t-} for subject i.
using LeftWeight = std::function<double(std::size_t subject, double t)>;

/// Product over observed outcome times t of 1 - (weighted events at t) /
/// (weighted risk set at t). A subject is at risk at t while t <= min(outcome, C, horizon).
/// Subjects with include[i] == 0 are ignored; an empty span includes everyone.
StepCurve weighted_kaplan_meier(std::span<const double> outcome, std::span<const double> censoring, double horizon,
                                const LeftWeight& weight, std::span<const char> include = {},
                                KaplanMeierDiagnostics* diagnostics = nullptr);

/// Same estimator over a dataset, for the first jump of `outcome`.
StepCurve weighted_kaplan_meier(const EventDataset& data, const NodeId& outcome, const LeftWeight& weight,
                                KaplanMeierDiagnostics* diagnostics = nullptr);

/// Sweep for weights from `ahw_from_times`: untreated subjects share one
/// path, so the risk set is a count times that path plus a running sum.
StepCurve weighted_kaplan_meier(const AhwWeights& weights, std::span<const double> outcome,
                                std::span<const double> censoring, double horizon, std::span<const char> include,
                                KaplanMeierDiagnostics* diagnostics = nullptr);

/// 1 - S pointwise.
StepCurve cumulative_incidence(const StepCurve& survival);

/// a - b on the union of both time sets.
StepCurve contrast(const StepCurve& a, const StepCurve& b);

// ---------------------------------------------------------------------------

/// Per-subject first jumps and group membership for a two-group analysis.
struct TwoGroupRecords {
    std::vector<std::string> ids;
    std::vector<double> treatment;
    std::vector<double> outcome;
    std::vector<double> censoring;
    std::vector<char> target;
    std::vector<char> reference;
    double horizon = 1.0;

    std::size_t size() const noexcept { return ids.size(); }
    TwoGroupRecords select(std::span<const std::size_t> indices) const;
};

TwoGroupRecords extract_records(const EventDataset& data, const NodeId& group_node, double target_value,
                                double reference_value, const NodeId& treatment, const NodeId& outcome);

struct TwoGroupCurves {
    StepCurve observed_target;    // unweighted incidence in the target group
    StepCurve reweighted_target;  // incidence in the target group under the reference treatment intensity
    StepCurve reference;          // unweighted incidence in the reference group
    StepCurve contrast;           // reweighted_target - reference
    KaplanMeierDiagnostics reweighted_diagnostics;
};

/// Full estimate with data-driven weights: Nelson-Aalen per group, theta-ratio
/// weights, weighted Kaplan-Meier, incidence and contrast.
TwoGroupCurves analyze_two_groups(const TwoGroupRecords& records, double bandwidth, const AhwOptions& options = {},
                                  AhwWeights* weights_out = nullptr);

/// Same curves with weights supplied per subject (for example exact weights).
TwoGroupCurves analyze_two_groups(const TwoGroupRecords& records, const LeftWeight& weight);

// ---------------------------------------------------------------------------

class DegenerateReplicate : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ContrastBand {
    std::vector<double> times;
    std::vector<double> point;
    std::vector<double> lower;
    std::vector<double> upper;
    double level = 0.95;
    std::size_t replicates = 0;  // requested
    std::size_t degenerate = 0;  // excluded from the percentiles
};

struct BootstrapOptions {
    unsigned threads = 1;
    std::size_t max_grid = 512;
    std::vector<double> extra_times;       // always on the grid
    std::optional<std::vector<double>> grid;  // replaces the thinned event-time grid
};

/// Re-estimates on a resample of subject indices (with replacement) and returns the curve.
using ResamplePipeline = std::function<StepCurve(std::span<const std::size_t> indices)>;

/// Union of curve times thinned to at most `max_grid` points, plus `extra` times.
std::vector<double> band_grid(const StepCurve& point, std::size_t max_grid, const std::vector<double>& extra);

/// Pointwise percentile band of the pipeline's curve over subject resamples.
/// Replicate r draws its indices from its own stream, so results do not depend
/// on the thread count. Replicates whose pipeline throws are counted and dropped.
ContrastBand bootstrap_bands(const ResamplePipeline& pipeline, std::size_t n_subjects, const StepCurve& point,
                             std::size_t replicates, double level, std::uint64_t seed,
                             const BootstrapOptions& options = {});

/// Dataset-level form: the pipeline sees a resampled copy of the dataset.
ContrastBand bootstrap_bands(const std::function<StepCurve(const EventDataset&)>& pipeline, const EventDataset& data,
                             std::size_t replicates, double level, std::uint64_t seed,
                             const BootstrapOptions& options = {});

/// Type-7 quantile of sorted values.
double quantile_sorted(std::span<const double> sorted, double p);

nlohmann::json to_json(const KaplanMeierDiagnostics& d);

}  // namespace locind
