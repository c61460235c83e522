#include "locind/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "locind/format.hpp"
#include "locind/parallel.hpp"
#include "locind/rng.hpp"

namespace locind {

double StepCurve::value(double t) const {
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    if (it == times.begin()) return values.front();
    return values[static_cast<std::size_t>(it - times.begin()) - 1];
}

StepCurve StepCurve::constant(double value, double start) { return {{start}, {value}}; }

namespace {

struct Subject {
    std::size_t index;
    double exit;
    bool event;
};

std::vector<Subject> members(std::span<const double> outcome, std::span<const double> censoring, double horizon,
                             std::span<const char> include) {
    std::vector<Subject> out;
    for (std::size_t i = 0; i < outcome.size(); ++i) {
        if (!include.empty() && !include[i]) continue;
        const double end = std::min(censoring[i], horizon);
        const bool event = outcome[i] <= end;
        out.push_back({i, event ? outcome[i] : end, event});
    }
    return out;
}

// Distinct event times with the member positions of the subjects failing there.
std::vector<std::pair<double, std::vector<std::size_t>>> event_groups(const std::vector<Subject>& m) {
    std::vector<std::size_t> order;
    for (std::size_t k = 0; k < m.size(); ++k)
        if (m[k].event) order.push_back(k);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return m[a].exit != m[b].exit ? m[a].exit < m[b].exit : m[a].index < m[b].index;
    });
    std::vector<std::pair<double, std::vector<std::size_t>>> out;
    for (std::size_t k : order) {
        if (out.empty() || out.back().first != m[k].exit) out.push_back({m[k].exit, {}});
        out.back().second.push_back(k);
    }
    return out;
}

// Folds one factor into the curve and the diagnostics.
void step(StepCurve& curve, double& s, double t, double events, double risk, std::size_t n_events,
          KaplanMeierDiagnostics& d) {
    if (!(risk > 0.0))
        throw ZeroWeightedRiskSet("weighted risk set is " + format_double(risk) + " at t=" + format_double(t), t);
    double factor = 1.0 - events / risk;
    if (factor < 0.0) {
        factor = 0.0;
        ++d.clipped;
    }
    if (n_events > 1) ++d.tied_times;
    d.min_risk_weight = d.event_times == 0 ? risk : std::min(d.min_risk_weight, risk);
    ++d.event_times;
    s *= factor;
    curve.times.push_back(t);
    curve.values.push_back(s);
}

// Risk sets where every subject carries the shared weight path until its
// switch time and a constant after it. Switch times below 0 mean "from the start".
StepCurve sweep(const WeightTrajectory* shared, std::span<const double> switch_time, std::span<const double> after,
                std::span<const double> outcome, std::span<const double> censoring, double horizon,
                std::span<const char> include, KaplanMeierDiagnostics* diagnostics) {
    const auto m = members(outcome, censoring, horizon, include);
    const auto groups = event_groups(m);
    KaplanMeierDiagnostics d;
    StepCurve curve = StepCurve::constant(1.0);
    double s = 1.0;

    std::vector<std::size_t> by_switch, by_exit(m.size());
    std::vector<char> switched(m.size(), 0), gone(m.size(), 0);
    std::size_t shared_count = 0;
    double after_sum = 0.0;
    for (std::size_t k = 0; k < m.size(); ++k) {
        const double sw = switch_time[m[k].index];
        if (sw < 0.0) {
            switched[k] = 1;
            after_sum += after[m[k].index];
        } else {
            ++shared_count;
            if (sw <= m[k].exit) by_switch.push_back(k);
        }
    }
    std::iota(by_exit.begin(), by_exit.end(), 0);
    auto order = [&](auto key) {
        return [&, key](std::size_t a, std::size_t b) {
            const double x = key(a), y = key(b);
            return x != y ? x < y : m[a].index < m[b].index;
        };
    };
    std::sort(by_switch.begin(), by_switch.end(), order([&](std::size_t k) { return switch_time[m[k].index]; }));
    std::sort(by_exit.begin(), by_exit.end(), order([&](std::size_t k) { return m[k].exit; }));

    std::size_t ps = 0, pe = 0;
    for (const auto& [t, failing] : groups) {
        for (; ps < by_switch.size() && switch_time[m[by_switch[ps]].index] < t; ++ps) {
            const std::size_t k = by_switch[ps];
            if (gone[k] || switched[k]) continue;
            switched[k] = 1;
            --shared_count;
            after_sum += after[m[k].index];
        }
        for (; pe < by_exit.size() && m[by_exit[pe]].exit < t; ++pe) {
            const std::size_t k = by_exit[pe];
            gone[k] = 1;
            if (switched[k])
                after_sum -= after[m[k].index];
            else
                --shared_count;
        }
        const double g = shared ? shared->left_limit(t) : 1.0;
        const double risk = g * static_cast<double>(shared_count) + after_sum;
        double events = 0.0;
        for (std::size_t k : failing) events += switched[k] ? after[m[k].index] : g;
        step(curve, s, t, events, risk, failing.size(), d);
    }
    if (diagnostics) *diagnostics = d;
    return curve;
}

}  // namespace

StepCurve weighted_kaplan_meier(std::span<const double> outcome, std::span<const double> censoring, double horizon,
                                const LeftWeight& weight, std::span<const char> include,
                                KaplanMeierDiagnostics* diagnostics) {
    auto m = members(outcome, censoring, horizon, include);
    const auto groups = event_groups(m);
    // latest exits first, so the risk set at t is a prefix
    std::vector<std::size_t> by_exit(m.size());
    std::iota(by_exit.begin(), by_exit.end(), 0);
    std::sort(by_exit.begin(), by_exit.end(), [&](std::size_t a, std::size_t b) {
        return m[a].exit != m[b].exit ? m[a].exit > m[b].exit : m[a].index < m[b].index;
    });
    KaplanMeierDiagnostics d;
    StepCurve curve = StepCurve::constant(1.0);
    double s = 1.0;
    for (const auto& [t, failing] : groups) {
        double risk = 0.0;
        for (std::size_t k : by_exit) {
            if (m[k].exit < t) break;
            risk += weight(m[k].index, t);
        }
        double events = 0.0;
        for (std::size_t k : failing) events += weight(m[k].index, t);
        step(curve, s, t, events, risk, failing.size(), d);
    }
    if (diagnostics) *diagnostics = d;
    return curve;
}

StepCurve weighted_kaplan_meier(const EventDataset& data, const NodeId& outcome, const LeftWeight& weight,
                                KaplanMeierDiagnostics* diagnostics) {
    const std::size_t v = data.index_of(outcome);
    std::vector<double> y, c;
    for (const auto& s : data.subjects) {
        y.push_back(s.first_jump(v));
        c.push_back(s.censoring_time);
    }
    return weighted_kaplan_meier(y, c, data.horizon, weight, {}, diagnostics);
}

StepCurve weighted_kaplan_meier(const AhwWeights& weights, std::span<const double> outcome,
                                std::span<const double> censoring, double horizon, std::span<const char> include,
                                KaplanMeierDiagnostics* diagnostics) {
    const std::size_t n = outcome.size();
    std::vector<double> switch_time(n), after(n);
    for (std::size_t i = 0; i < n; ++i) {
        const bool weighted = weights.group[i] == AhwWeights::Group::Target;
        switch_time[i] = weighted ? weights.switch_time[i] : -1.0;
        after[i] = weighted ? weights.after_switch[i] : 1.0;
    }
    return sweep(&weights.common, switch_time, after, outcome, censoring, horizon, include, diagnostics);
}

StepCurve cumulative_incidence(const StepCurve& survival) {
    StepCurve out = survival;
    for (double& v : out.values) v = 1.0 - v;
    return out;
}

StepCurve contrast(const StepCurve& a, const StepCurve& b) {
    StepCurve out;
    std::set_union(a.times.begin(), a.times.end(), b.times.begin(), b.times.end(), std::back_inserter(out.times));
    out.times.erase(std::unique(out.times.begin(), out.times.end()), out.times.end());
    for (double t : out.times) out.values.push_back(a.value(t) - b.value(t));
    return out;
}

// ---------------------------------------------------------------------------

TwoGroupRecords TwoGroupRecords::select(std::span<const std::size_t> indices) const {
    TwoGroupRecords r;
    r.horizon = horizon;
    for (std::size_t i : indices) {
        r.ids.push_back(ids[i]);
        r.treatment.push_back(treatment[i]);
        r.outcome.push_back(outcome[i]);
        r.censoring.push_back(censoring[i]);
        r.target.push_back(target[i]);
        r.reference.push_back(reference[i]);
    }
    return r;
}

TwoGroupRecords extract_records(const EventDataset& data, const NodeId& group_node, double target_value,
                                double reference_value, const NodeId& treatment, const NodeId& outcome) {
    const std::size_t g = data.index_of(group_node), x = data.index_of(treatment), y = data.index_of(outcome);
    if (data.nodes[g].kind != NodeKind::Baseline) throw DatasetError("group node '" + group_node + "' is not baseline");
    TwoGroupRecords r;
    r.horizon = data.horizon;
    for (const auto& s : data.subjects) {
        r.ids.push_back(s.id);
        r.treatment.push_back(s.first_jump(x));
        r.outcome.push_back(s.first_jump(y));
        r.censoring.push_back(s.censoring_time);
        r.target.push_back(s.baseline[g] == target_value);
        r.reference.push_back(s.baseline[g] == reference_value);
    }
    return r;
}

namespace {

StepCurve unit_km(const TwoGroupRecords& r, std::span<const char> include) {
    const std::vector<double> start(r.size(), -1.0), one(r.size(), 1.0);
    return sweep(nullptr, start, one, r.outcome, r.censoring, r.horizon, include, nullptr);
}

void require_groups(const TwoGroupRecords& r) {
    if (std::find(r.target.begin(), r.target.end(), 1) == r.target.end()) throw EmptyGroup("target group is empty");
    if (std::find(r.reference.begin(), r.reference.end(), 1) == r.reference.end())
        throw EmptyGroup("reference group is empty");
}

}  // namespace

TwoGroupCurves analyze_two_groups(const TwoGroupRecords& r, double bandwidth, const AhwOptions& options,
                                  AhwWeights* weights_out) {
    require_groups(r);
    auto w = ahw_from_times(r.target, r.reference, r.treatment, r.censoring, r.horizon, bandwidth, options);
    TwoGroupCurves c;
    c.observed_target = cumulative_incidence(unit_km(r, r.target));
    c.reweighted_target = cumulative_incidence(
        weighted_kaplan_meier(w, r.outcome, r.censoring, r.horizon, r.target, &c.reweighted_diagnostics));
    c.reference = cumulative_incidence(unit_km(r, r.reference));
    c.contrast = contrast(c.reweighted_target, c.reference);
    if (weights_out) *weights_out = std::move(w);
    return c;
}

TwoGroupCurves analyze_two_groups(const TwoGroupRecords& r, const LeftWeight& weight) {
    require_groups(r);
    TwoGroupCurves c;
    c.observed_target = cumulative_incidence(unit_km(r, r.target));
    c.reweighted_target = cumulative_incidence(
        weighted_kaplan_meier(r.outcome, r.censoring, r.horizon, weight, r.target, &c.reweighted_diagnostics));
    c.reference = cumulative_incidence(unit_km(r, r.reference));
    c.contrast = contrast(c.reweighted_target, c.reference);
    return c;
}

// ---------------------------------------------------------------------------

double quantile_sorted(std::span<const double> sorted, double p) {
    const double h = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

std::vector<double> band_grid(const StepCurve& point, std::size_t max_grid, const std::vector<double>& extra) {
    std::vector<double> out;
    const std::size_t m = point.times.size();
    if (m <= max_grid) {
        out = point.times;
    } else if (max_grid == 1) {
        out.push_back(point.times.front());
    } else if (max_grid > 1) {
        for (std::size_t k = 0; k < max_grid; ++k) out.push_back(point.times[k * (m - 1) / (max_grid - 1)]);
    }
    out.insert(out.end(), extra.begin(), extra.end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

ContrastBand bootstrap_bands(const ResamplePipeline& pipeline, std::size_t n_subjects, const StepCurve& point,
                             std::size_t replicates, double level, std::uint64_t seed,
                             const BootstrapOptions& options) {
    if (replicates < 2) throw std::invalid_argument("bootstrap needs at least two replicates");
    if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("band level must lie in (0, 1)");
    if (n_subjects == 0) throw std::invalid_argument("bootstrap needs at least one subject");

    ContrastBand band;
    band.level = level;
    band.replicates = replicates;
    band.times = options.grid ? *options.grid : band_grid(point, options.max_grid, options.extra_times);
    const std::size_t g = band.times.size();
    for (double t : band.times) band.point.push_back(point.value(t));

    std::vector<std::vector<double>> values(replicates);
    std::vector<char> ok(replicates, 0);
    parallel_for(replicates, options.threads, [&](std::size_t r) {
        Rng rng = Rng::stream(seed, r, 0x626F6F74);
        std::vector<std::size_t> idx(n_subjects);
        for (auto& i : idx) i = static_cast<std::size_t>(rng.below(n_subjects));
        std::sort(idx.begin(), idx.end());
        try {
            const StepCurve c = pipeline(idx);
            values[r].reserve(g);
            for (double t : band.times) values[r].push_back(c.value(t));
            ok[r] = std::all_of(values[r].begin(), values[r].end(), [](double v) { return std::isfinite(v); });
        } catch (const DegenerateReplicate&) {
        } catch (const ZeroWeightedRiskSet&) {
        } catch (const EmptyGroup&) {
        }
    });
    std::vector<std::size_t> good;
    for (std::size_t r = 0; r < replicates; ++r)
        if (ok[r]) good.push_back(r);
    band.degenerate = replicates - good.size();
    if (good.size() < 2)
        throw DegenerateReplicate("only " + std::to_string(good.size()) + " of " + std::to_string(replicates) +
                                  " bootstrap replicates were usable");

    const double lo_p = (1.0 - level) / 2.0, hi_p = 1.0 - lo_p;
    std::vector<double> column(good.size());
    for (std::size_t k = 0; k < g; ++k) {
        for (std::size_t j = 0; j < good.size(); ++j) column[j] = values[good[j]][k];
        std::sort(column.begin(), column.end());
        band.lower.push_back(std::min(quantile_sorted(column, lo_p), band.point[k]));
        band.upper.push_back(std::max(quantile_sorted(column, hi_p), band.point[k]));
    }
    return band;
}

ContrastBand bootstrap_bands(const std::function<StepCurve(const EventDataset&)>& pipeline, const EventDataset& data,
                             std::size_t replicates, double level, std::uint64_t seed,
                             const BootstrapOptions& options) {
    const StepCurve point = pipeline(data);
    return bootstrap_bands(
        [&](std::span<const std::size_t> idx) {
            return pipeline(select_subjects(data, std::vector<std::size_t>(idx.begin(), idx.end())));
        },
        data.size(), point, replicates, level, seed, options);
}

nlohmann::json to_json(const KaplanMeierDiagnostics& d) {
    return {{"clipped_factors", d.clipped},
            {"tied_event_times", d.tied_times},
            {"event_times", d.event_times},
            {"min_weighted_risk_set", d.min_risk_weight}};
}

}  // namespace locind
