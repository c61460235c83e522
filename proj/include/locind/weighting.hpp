#pragma once

#include <nlohmann/json.hpp>

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "locind/dataset.hpp"
#include "locind/simulation.hpp"

namespace locind {

/// Right-continuous step function A_t = sum of increments at jump times <= t.
struct CumulativeHazard {
    std::vector<double> times;       // strictly increasing
    std::vector<double> increments;  // > 0
    std::vector<double> cumulative;  // running sums
    std::vector<double> at_risk;     // risk-set size just before each time
    std::vector<double> events;      // events at each time

    double value(double t) const;       // A_t
    double left_limit(double t) const;  // A_{t-}
    double jump(double t) const;        // A_t - A_{t-}
};

class EmptyGroup : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using SubjectFilter = std::function<bool(const SubjectPath&)>;

/// Nelson-Aalen estimator for the first jump of `process`. A subject is at risk
/// at s while it has not jumped before s, s <= C and s <= horizon.
CumulativeHazard nelson_aalen(const EventDataset& data, const NodeId& process, const SubjectFilter& group = {});

/// Same fold on bare first-jump and exit times.
CumulativeHazard nelson_aalen(std::span<const double> first_jump, std::span<const double> censoring, double horizon);

/// Z = prod over jumps s <= t of lambda(s) times exp(-int_0^t lambda). The
/// integral uses adaptive Gauss-Kronrod quadrature between jump times.
double likelihood_contribution(const EventDataset& data, const SubjectPath& path, const NodeId& node,
                               const PathFunctional& intensity, double t);
double log_likelihood_contribution(const EventDataset& data, const SubjectPath& path, const NodeId& node,
                                   const PathFunctional& intensity, double t);

/// Weight process sampled at anchor times; between anchors it is either
/// interpolated linearly in log (exact for constant rates) or held constant.
struct WeightTrajectory {
    enum class Interpolation { LogLinear, Step };

    std::vector<double> times;        // strictly increasing, times.front() == 0
    std::vector<double> values;       // W at each anchor
    std::vector<double> left_limits;  // W just before each anchor
    Interpolation interpolation = Interpolation::LogLinear;

    static WeightTrajectory constant(double value = 1.0);

    double value(double t) const;
    double left_limit(double t) const;
    double end_time() const { return times.back(); }
};

class NegativeRho : public RateError {
public:
    using RateError::RateError;
};

/// W_t = prod_{s<=t} rho_s^{dN_s} exp(-int_0^t (rho_s - 1) lambda_s ds) for the
/// jumps of `process`, anchored at {0} u grid u jump times, stopped at `stop`.
WeightTrajectory exact_weights(const EventDataset& data, const SubjectPath& path, const NodeId& process,
                               const PathFunctional& base_intensity, const PathFunctional& rho,
                               std::vector<double> grid, double stop = kNever);

/// Product of the censoring and treatment factors, stopped at the subject's censoring time.
WeightTrajectory combined_weights(const EventDataset& data, const SubjectPath& path, const NodeId& censoring,
                                  const PathFunctional& lambda_c, const PathFunctional& rho_c,
                                  const NodeId& treatment, const PathFunctional& lambda_x,
                                  const PathFunctional& rho_x, std::vector<double> grid);

/// theta_s = (At_s - At_{s-b}) / (Ah_s - Ah_{s-b}); 1 with a flag when the
/// denominator window is empty.
class ThetaRatio {
public:
    ThetaRatio(CumulativeHazard reference, CumulativeHazard target, double bandwidth);

    struct Value {
        double theta;
        bool flagged;
    };
    Value at(double s) const;
    Value left_limit(double s) const;

    const CumulativeHazard& reference() const noexcept { return reference_; }
    const CumulativeHazard& target() const noexcept { return target_; }
    double bandwidth() const noexcept { return b_; }

private:
    CumulativeHazard reference_, target_;
    double b_;
};

class NonPositiveBandwidth : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

double default_bandwidth(std::size_t n, double time_scale);

/// Data-driven weights that impose the reference group's treatment intensity
/// on the target group. Untreated target subjects share one path G; a subject
/// treated at s moves to G_{s-} (theta_{s-} - dAt_s + dAh_s) and stays there.
struct AhwWeights {
    enum class Group { Target, Reference, Other };

    WeightTrajectory common;           // G, step interpolation
    std::vector<Group> group;          // per subject
    std::vector<double> switch_time;   // own treatment time if observed, else +inf
    std::vector<double> after_switch;  // weight from switch_time on
    std::vector<double> stop_time;     // min(C, horizon)
    std::vector<bool> theta_flagged;   // own jump used the zero-denominator policy
    std::size_t theta_flags = 0;
    std::size_t truncated = 0;
    double bandwidth = 0.0;

    double value(std::size_t i, double t) const;
    double left_limit(std::size_t i, double t) const;
    WeightTrajectory trajectory(std::size_t i, const std::vector<double>& grid) const;
};

struct AhwOptions {
    double truncation_quantile = 0.0;  // 0 = off; else clamp to [q, 1-q] quantiles of final weights
};

/// Weights from bare times: group membership flags (a subject may be in both
/// groups), first treatment jump and censoring time per subject. Subjects in
/// the target group are weighted; all others keep weight 1.
AhwWeights ahw_from_times(std::span<const char> in_target, std::span<const char> in_reference,
                          std::span<const double> treatment,
                          std::span<const double> censoring, double horizon, double bandwidth,
                          const AhwOptions& options = {});

AhwWeights estimate_weights_ahw(const EventDataset& data, const SubjectFilter& target,
                                const SubjectFilter& reference, const NodeId& treatment, double bandwidth,
                                const AhwOptions& options = {});

/// Mean and variance of W across subjects at each grid time.
nlohmann::json weight_diagnostics(const std::vector<WeightTrajectory>& weights, const std::vector<double>& grid);

}  // namespace locind
