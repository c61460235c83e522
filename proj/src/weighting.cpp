#include "locind/weighting.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "locind/format.hpp"

namespace locind {

namespace {

std::size_t count_le(const std::vector<double>& sorted, double t) {
    return static_cast<std::size_t>(std::upper_bound(sorted.begin(), sorted.end(), t) - sorted.begin());
}

std::size_t count_lt(const std::vector<double>& sorted, double t) {
    return static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), t) - sorted.begin());
}

}  // namespace

double CumulativeHazard::value(double t) const {
    const std::size_t k = count_le(times, t);
    return k == 0 ? 0.0 : cumulative[k - 1];
}

double CumulativeHazard::left_limit(double t) const {
    const std::size_t k = count_lt(times, t);
    return k == 0 ? 0.0 : cumulative[k - 1];
}

double CumulativeHazard::jump(double t) const {
    const std::size_t k = count_lt(times, t);
    return k < times.size() && times[k] == t ? increments[k] : 0.0;
}

CumulativeHazard nelson_aalen(std::span<const double> first_jump, std::span<const double> censoring,
                              double horizon) {
    const std::size_t n = first_jump.size();
    std::vector<double> exit(n), events;
    for (std::size_t i = 0; i < n; ++i) {
        const double end = std::min(censoring[i], horizon);
        const bool event = first_jump[i] <= end;
        exit[i] = event ? first_jump[i] : end;
        if (event) events.push_back(first_jump[i]);
    }
    std::sort(exit.begin(), exit.end());
    std::sort(events.begin(), events.end());
    CumulativeHazard out;
    double running = 0.0;
    for (std::size_t j = 0; j < events.size();) {
        const double t = events[j];
        std::size_t d = 0;
        while (j < events.size() && events[j] == t) ++d, ++j;
        const double at_risk = static_cast<double>(n - count_lt(exit, t));
        const double inc = static_cast<double>(d) / at_risk;
        running += inc;
        out.times.push_back(t);
        out.increments.push_back(inc);
        out.cumulative.push_back(running);
        out.at_risk.push_back(at_risk);
        out.events.push_back(static_cast<double>(d));
    }
    return out;
}

CumulativeHazard nelson_aalen(const EventDataset& data, const NodeId& process, const SubjectFilter& group) {
    const std::size_t v = data.index_of(process);
    std::vector<double> first, cens;
    for (const auto& s : data.subjects) {
        if (group && !group(s)) continue;
        first.push_back(s.first_jump(v));
        cens.push_back(s.censoring_time);
    }
    if (first.empty()) throw EmptyGroup("no subjects in group for Nelson-Aalen estimate of '" + process + "'");
    return nelson_aalen(first, cens, data.horizon);
}

// ---------------------------------------------------------------------------

namespace {

double integrate(const std::function<double(double)>& f, double a, double b) {
    if (!(b > a)) return 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, 15, 1e-10);
}

// Sorted jump times of every node of the path within (lo, hi).
std::vector<double> breakpoints(const SubjectPath& path, double lo, double hi) {
    std::vector<double> out;
    for (const auto& j : path.jumps)
        for (double t : j)
            if (t > lo && t < hi) out.push_back(t);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

// int_a^b g over [a, b], split at every jump of the path.
double piecewise_integral(const SubjectPath& path, const std::function<double(double)>& g, double a, double b) {
    double total = 0.0, lo = a;
    for (double bp : breakpoints(path, a, b)) {
        total += integrate(g, lo, bp);
        lo = bp;
    }
    return total + integrate(g, lo, b);
}

}  // namespace

double log_likelihood_contribution(const EventDataset& data, const SubjectPath& path, const NodeId& node,
                                   const PathFunctional& intensity, double t) {
    const BoundFunctional lambda(intensity, data, node);
    double log_z = 0.0;
    for (double s : path.jumps[lambda.self()]) {
        if (s > t) break;
        log_z += std::log(lambda(path, s));
    }
    log_z -= piecewise_integral(path, [&](double u) { return lambda(path, u); }, 0.0, t);
    return log_z;
}

double likelihood_contribution(const EventDataset& data, const SubjectPath& path, const NodeId& node,
                               const PathFunctional& intensity, double t) {
    return std::exp(log_likelihood_contribution(data, path, node, intensity, t));
}

// ---------------------------------------------------------------------------

WeightTrajectory WeightTrajectory::constant(double value) {
    WeightTrajectory w;
    w.times = {0.0};
    w.values = {value};
    w.left_limits = {value};
    w.interpolation = Interpolation::Step;
    return w;
}

double WeightTrajectory::value(double t) const {
    if (t <= times.front()) return t < times.front() ? left_limits.front() : values.front();
    const std::size_t k = count_le(times, t) - 1;
    if (k + 1 == times.size() || times[k] == t || interpolation == Interpolation::Step) return values[k];
    const double a = values[k], b = left_limits[k + 1];
    const double frac = (t - times[k]) / (times[k + 1] - times[k]);
    if (a > 0.0 && b > 0.0) return std::exp(std::log(a) + frac * (std::log(b) - std::log(a)));
    return a + frac * (b - a);
}

double WeightTrajectory::left_limit(double t) const {
    if (t <= times.front()) return left_limits.front();
    const std::size_t k = count_lt(times, t);
    if (k < times.size() && times[k] == t) return left_limits[k];
    return value(t);
}

namespace {

struct Factor {
    std::vector<double> times, values, left_limits;
};

// One factor prod rho^{dN} exp(-int (rho - 1) lambda) on the given anchors.
Factor weight_factor(const EventDataset& data, const SubjectPath& path, const NodeId& process,
                     const PathFunctional& base_intensity, const PathFunctional& rho,
                     const std::vector<double>& anchors) {
    const BoundFunctional lambda(base_intensity, data, process);
    const BoundFunctional ratio(rho, data, process);
    const auto& own = path.jumps[lambda.self()];
    auto integrand = [&](double u) { return (ratio(path, u) - 1.0) * lambda(path, u); };

    Factor f;
    double w = 1.0, prev = 0.0;
    f.times.push_back(0.0);
    f.values.push_back(1.0);
    f.left_limits.push_back(1.0);
    for (std::size_t k = 1; k < anchors.size(); ++k) {
        const double t = anchors[k];
        if (w != 0.0) w *= std::exp(-piecewise_integral(path, integrand, prev, t));
        const double left = w;
        if (std::binary_search(own.begin(), own.end(), t)) {
            const double r = ratio(path, t);
            w *= r;
        }
        f.times.push_back(t);
        f.values.push_back(w);
        f.left_limits.push_back(left);
        prev = t;
    }
    return f;
}

std::vector<double> anchor_times(std::vector<double> grid, const std::vector<double>& jumps, double end) {
    grid.insert(grid.end(), jumps.begin(), jumps.end());
    grid.push_back(end);
    std::vector<double> out{0.0};
    std::sort(grid.begin(), grid.end());
    for (double t : grid)
        if (t > 0.0 && t <= end && t > out.back()) out.push_back(t);
    return out;
}

// Own jumps and jumps of every process the integrand reads: between two of
// these the integrand only moves with time.
std::vector<double> relevant_jumps(const EventDataset& data, const SubjectPath& path, const NodeId& process,
                                   const PathFunctional& lambda, const PathFunctional& rho) {
    std::vector<double> out = path.jumps[data.index_of(process)];
    for (const auto* deps : {&lambda.dependencies, &rho.dependencies})
        for (const auto& d : *deps) {
            const auto& j = path.jumps[data.index_of(d)];
            out.insert(out.end(), j.begin(), j.end());
        }
    return out;
}

void check_rho_bound(const PathFunctional& rho, const NodeId& process) {
    if (!(rho.bound >= 0.0) || !std::isfinite(rho.bound))
        throw NegativeRho("ratio process for '" + process + "' needs a finite nonnegative bound", process, 0.0);
}

}  // namespace

WeightTrajectory exact_weights(const EventDataset& data, const SubjectPath& path, const NodeId& process,
                               const PathFunctional& base_intensity, const PathFunctional& rho,
                               std::vector<double> grid, double stop) {
    check_rho_bound(rho, process);
    const double end = std::min(stop, data.horizon);
    const auto anchors = anchor_times(std::move(grid), relevant_jumps(data, path, process, base_intensity, rho), end);
    Factor f;
    try {
        f = weight_factor(data, path, process, base_intensity, rho, anchors);
    } catch (const NegativeRate& e) {
        throw NegativeRho(e.what(), e.node(), e.time());
    }
    WeightTrajectory w;
    w.times = std::move(f.times);
    w.values = std::move(f.values);
    w.left_limits = std::move(f.left_limits);
    return w;
}

WeightTrajectory combined_weights(const EventDataset& data, const SubjectPath& path, const NodeId& censoring,
                                  const PathFunctional& lambda_c, const PathFunctional& rho_c,
                                  const NodeId& treatment, const PathFunctional& lambda_x,
                                  const PathFunctional& rho_x, std::vector<double> grid) {
    const auto cj = relevant_jumps(data, path, censoring, lambda_c, rho_c);
    const auto xj = relevant_jumps(data, path, treatment, lambda_x, rho_x);
    grid.insert(grid.end(), cj.begin(), cj.end());
    grid.insert(grid.end(), xj.begin(), xj.end());
    const double stop = path.censoring_time;
    auto wc = exact_weights(data, path, censoring, lambda_c, rho_c, grid, stop);
    const auto wx = exact_weights(data, path, treatment, lambda_x, rho_x, std::move(grid), stop);
    for (std::size_t k = 0; k < wc.times.size(); ++k) {
        wc.values[k] *= wx.values[k];
        wc.left_limits[k] *= wx.left_limits[k];
    }
    return wc;
}

// ---------------------------------------------------------------------------

ThetaRatio::ThetaRatio(CumulativeHazard reference, CumulativeHazard target, double bandwidth)
    : reference_(std::move(reference)), target_(std::move(target)), b_(bandwidth) {
    if (!(bandwidth > 0.0)) throw NonPositiveBandwidth("bandwidth must be positive");
}

ThetaRatio::Value ThetaRatio::at(double s) const {
    const double num = reference_.value(s) - reference_.value(s - b_);
    const double den = target_.value(s) - target_.value(s - b_);
    if (!(den > 0.0)) return {1.0, true};
    return {num / den, false};
}

ThetaRatio::Value ThetaRatio::left_limit(double s) const {
    const double num = reference_.left_limit(s) - reference_.left_limit(s - b_);
    const double den = target_.left_limit(s) - target_.left_limit(s - b_);
    if (!(den > 0.0)) return {1.0, true};
    return {num / den, false};
}

double default_bandwidth(std::size_t n, double time_scale) {
    return std::pow(static_cast<double>(std::max<std::size_t>(n, 1)), -0.25) * time_scale;
}

double AhwWeights::value(std::size_t i, double t) const {
    if (group[i] != Group::Target) return 1.0;
    t = std::min(t, stop_time[i]);
    return t >= switch_time[i] ? after_switch[i] : common.value(t);
}

double AhwWeights::left_limit(std::size_t i, double t) const {
    if (group[i] != Group::Target) return 1.0;
    if (t > stop_time[i]) return value(i, stop_time[i]);
    return t > switch_time[i] ? after_switch[i] : common.left_limit(t);
}

WeightTrajectory AhwWeights::trajectory(std::size_t i, const std::vector<double>& grid) const {
    const double end = stop_time[i];
    std::vector<double> pts = grid;
    if (group[i] == Group::Target) {
        const double until = std::min(end, switch_time[i]);
        for (double t : common.times)
            if (t <= until) pts.push_back(t);
        if (switch_time[i] <= end) pts.push_back(switch_time[i]);
    }
    std::vector<double> anchors{0.0};
    pts.push_back(end);
    std::sort(pts.begin(), pts.end());
    for (double t : pts)
        if (t > 0.0 && t <= end && t > anchors.back()) anchors.push_back(t);
    WeightTrajectory w;
    w.interpolation = WeightTrajectory::Interpolation::Step;
    for (double t : anchors) {
        w.times.push_back(t);
        w.values.push_back(value(i, t));
        w.left_limits.push_back(t == 0.0 ? 1.0 : left_limit(i, t));
    }
    return w;
}

AhwWeights ahw_from_times(std::span<const char> in_target, std::span<const char> in_reference,
                          std::span<const double> treatment, std::span<const double> censoring, double horizon,
                          double bandwidth, const AhwOptions& options) {
    if (!(bandwidth > 0.0)) throw NonPositiveBandwidth("bandwidth must be positive");
    const std::size_t n = treatment.size();
    std::vector<double> tx, tc, rx, rc;
    for (std::size_t i = 0; i < n; ++i) {
        if (in_target[i]) tx.push_back(treatment[i]), tc.push_back(censoring[i]);
        if (in_reference[i]) rx.push_back(treatment[i]), rc.push_back(censoring[i]);
    }
    if (tx.empty()) throw EmptyGroup("target group is empty");
    if (rx.empty()) throw EmptyGroup("reference group is empty");
    const ThetaRatio theta(nelson_aalen(rx, rc, horizon), nelson_aalen(tx, tc, horizon), bandwidth);
    const auto& at = theta.reference();
    const auto& ah = theta.target();

    AhwWeights w;
    w.bandwidth = bandwidth;
    // G_u = G_{u-} (1 - dAt_u + dAh_u) over the pooled jump times
    std::vector<double> pooled = at.times;
    pooled.insert(pooled.end(), ah.times.begin(), ah.times.end());
    std::sort(pooled.begin(), pooled.end());
    pooled.erase(std::unique(pooled.begin(), pooled.end()), pooled.end());
    w.common = WeightTrajectory::constant(1.0);
    double g = 1.0;
    for (double u : pooled) {
        const double left = g;
        g *= 1.0 - at.jump(u) + ah.jump(u);
        w.common.times.push_back(u);
        w.common.values.push_back(g);
        w.common.left_limits.push_back(left);
    }

    w.group.resize(n);
    w.switch_time.assign(n, kNever);
    w.after_switch.assign(n, 1.0);
    w.stop_time.resize(n);
    w.theta_flagged.assign(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        w.stop_time[i] = std::min(censoring[i], horizon);
        w.group[i] = in_target[i] ? AhwWeights::Group::Target
                     : in_reference[i] ? AhwWeights::Group::Reference
                                       : AhwWeights::Group::Other;
        if (w.group[i] != AhwWeights::Group::Target || !(treatment[i] <= w.stop_time[i])) continue;
        const double s = treatment[i];
        const auto th = theta.left_limit(s);
        w.switch_time[i] = s;
        w.after_switch[i] = w.common.left_limit(s) * (th.theta - at.jump(s) + ah.jump(s));
        w.theta_flagged[i] = th.flagged;
        w.theta_flags += th.flagged;
    }

    if (options.truncation_quantile > 0.0) {
        std::vector<double> finals;
        for (std::size_t i = 0; i < n; ++i)
            if (w.group[i] == AhwWeights::Group::Target) finals.push_back(w.value(i, w.stop_time[i]));
        std::sort(finals.begin(), finals.end());
        const double q = std::min(options.truncation_quantile, 0.5);
        const auto pick = [&](double p) {
            const double h = p * static_cast<double>(finals.size() - 1);
            const std::size_t lo = static_cast<std::size_t>(std::floor(h));
            const std::size_t hi = std::min(lo + 1, finals.size() - 1);
            return finals[lo] + (h - static_cast<double>(lo)) * (finals[hi] - finals[lo]);
        };
        const double lo = pick(q), hi = pick(1.0 - q);
        for (std::size_t i = 0; i < n; ++i) {
            if (w.group[i] != AhwWeights::Group::Target) continue;
            const double f = w.value(i, w.stop_time[i]);
            if (f < lo || f > hi) ++w.truncated;
            w.after_switch[i] = std::clamp(w.after_switch[i], lo, hi);
        }
        for (auto* vals : {&w.common.values, &w.common.left_limits})
            for (double& v : *vals) v = std::clamp(v, lo, hi);
    }
    return w;
}

AhwWeights estimate_weights_ahw(const EventDataset& data, const SubjectFilter& target,
                                const SubjectFilter& reference, const NodeId& treatment, double bandwidth,
                                const AhwOptions& options) {
    const std::size_t v = data.index_of(treatment);
    const std::size_t n = data.size();
    std::vector<char> in_t(n), in_r(n);
    std::vector<double> tx(n), cens(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& s = data.subjects[i];
        in_t[i] = target(s);
        in_r[i] = reference(s);
        tx[i] = s.first_jump(v);
        cens[i] = s.censoring_time;
    }
    return ahw_from_times(in_t, in_r, tx, cens, data.horizon, bandwidth, options);
}

nlohmann::json weight_diagnostics(const std::vector<WeightTrajectory>& weights, const std::vector<double>& grid) {
    nlohmann::json mean = nlohmann::json::array(), var = nlohmann::json::array();
    for (double t : grid) {
        double s = 0.0, s2 = 0.0;
        for (const auto& w : weights) {
            const double v = w.value(t);
            s += v;
            s2 += v * v;
        }
        const double n = static_cast<double>(weights.size());
        const double m = n > 0 ? s / n : 0.0;
        mean.push_back(m);
        var.push_back(n > 1 ? (s2 - n * m * m) / (n - 1) : 0.0);
    }
    return {{"grid", grid}, {"mean", mean}, {"variance", var}};
}

}  // namespace locind
