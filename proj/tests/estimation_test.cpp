#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "fixtures.hpp"
#include "locind/estimation.hpp"
#include "locind/rng.hpp"

namespace locind {
namespace {

// Textbook product-limit estimator written directly from the definition:
// S(t) = prod over distinct event times u <= t of (1 - d_u / n_u).
std::map<double, double> plain_km(const std::vector<double>& y, const std::vector<double>& c, double horizon) {
    std::map<double, double> out;
    std::vector<double> times;
    for (std::size_t i = 0; i < y.size(); ++i)
        if (y[i] <= c[i] && y[i] <= horizon) times.push_back(y[i]);
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    double s = 1;
    for (double u : times) {
        double d = 0, n = 0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            const double exit = std::min({y[i], c[i], horizon});
            n += exit >= u;
            d += y[i] == u && y[i] <= c[i];
        }
        s *= 1 - d / n;
        out[u] = s;
    }
    return out;
}

double sup_distance(const StepCurve& curve, const std::map<double, double>& ref) {
    double sup = std::abs(curve.value(0.0) - 1.0);
    for (const auto& [t, v] : ref) sup = std::max(sup, std::abs(curve.value(t) - v));
    for (double t : curve.times) {
        auto it = ref.upper_bound(t);
        const double r = it == ref.begin() ? 1.0 : std::prev(it)->second;
        sup = std::max(sup, std::abs(curve.value(t) - r));
    }
    return sup;
}

const LeftWeight unit = [](std::size_t, double) { return 1.0; };

TEST(WeightedKm, SingleSubjectDropsToZero) {
    const std::vector<double> y{1.0}, c{kNever};
    const auto s = weighted_kaplan_meier(y, c, 5.0, unit);
    EXPECT_EQ(s.value(0.99), 1.0);
    EXPECT_EQ(s.value(1.0), 0.0);
}

TEST(WeightedKm, TwoWeightedSubjects) {
    const std::vector<double> y{0.5, kNever}, c{kNever, kNever};
    const auto s = weighted_kaplan_meier(y, c, 1.0, [](std::size_t i, double) { return i == 0 ? 2.0 : 1.0; });
    EXPECT_DOUBLE_EQ(s.value(0.5), 1.0 / 3.0);
}

TEST(WeightedKm, UnitWeightsMatchPlainKaplanMeier) {
    Rng rng(42);
    for (int rep = 0; rep < 100; ++rep) {
        const std::size_t n = 5 + rng.below(200);
        std::vector<double> y, c;
        const bool coarse = rep % 3 == 0;
        for (std::size_t i = 0; i < n; ++i) {
            double a = rng.exponential(1.0), b = rng.exponential(0.5);
            if (coarse) a = std::ceil(a * 5) / 5, b = std::ceil(b * 5) / 5;
            y.push_back(rng.bernoulli(0.9) ? a : kNever);
            c.push_back(b);
        }
        const double horizon = 2.5;
        const auto ref = plain_km(y, c, horizon);
        EXPECT_LE(sup_distance(weighted_kaplan_meier(y, c, horizon, unit), ref), 1e-12);
        // the shared-path sweep with no target subjects
        const auto w = ahw_from_times(std::vector<char>(n, 1), std::vector<char>(n, 1), y, c, horizon, 0.5);
        AhwWeights ones = w;
        std::fill(ones.group.begin(), ones.group.end(), AhwWeights::Group::Reference);
        EXPECT_LE(sup_distance(weighted_kaplan_meier(ones, y, c, horizon, {}), ref), 1e-12);
    }
}

TEST(WeightedKm, TiesAreCountedAndPooled) {
    const std::vector<double> y{1.0, 1.0, 2.0, kNever}, c(4, kNever);
    KaplanMeierDiagnostics d;
    const auto s = weighted_kaplan_meier(y, c, 3.0, unit, {}, &d);
    EXPECT_EQ(d.tied_times, 1u);
    EXPECT_EQ(d.event_times, 2u);
    EXPECT_DOUBLE_EQ(s.value(1.0), 0.5);
    EXPECT_DOUBLE_EQ(s.value(2.0), 0.25);
}

TEST(WeightedKm, NegativeFactorIsClipped) {
    const std::vector<double> y{1.0, kNever}, c(2, kNever);
    KaplanMeierDiagnostics d;
    const auto s = weighted_kaplan_meier(y, c, 2.0, [](std::size_t i, double) { return i == 0 ? 1.0 : -0.5; }, {}, &d);
    EXPECT_EQ(d.clipped, 1u);
    EXPECT_EQ(s.value(1.5), 0.0);
}

TEST(WeightedKm, ZeroRiskSetThrows) {
    const std::vector<double> y{1.0}, c{kNever};
    try {
        weighted_kaplan_meier(y, c, 2.0, [](std::size_t, double) { return 0.0; });
        FAIL();
    } catch (const ZeroWeightedRiskSet& e) {
        EXPECT_EQ(e.time(), 1.0);
    }
}

TEST(WeightedKm, IncludeMaskRestrictsRiskSet) {
    const std::vector<double> y{1.0, 2.0, 3.0}, c(3, kNever);
    const std::vector<char> mask{1, 0, 1};
    const auto s = weighted_kaplan_meier(y, c, 5.0, unit, mask);
    EXPECT_EQ(s.times, (std::vector<double>{0.0, 1.0, 3.0}));
    EXPECT_DOUBLE_EQ(s.value(2.0), 0.5);
}

TEST(WeightedKm, SweepMatchesGenericWithDataDrivenWeights) {
    const auto data = simulate_system(fixtures::two_group_design(), 3000, 5);
    const auto r = extract_records(data, "G", 1.0, 0.0, "X", "Y");
    const auto w = ahw_from_times(r.target, r.reference, r.treatment, r.censoring, r.horizon, 0.25);
    KaplanMeierDiagnostics d1, d2;
    const auto fast = weighted_kaplan_meier(w, r.outcome, r.censoring, r.horizon, r.target, &d1);
    const auto slow = weighted_kaplan_meier(r.outcome, r.censoring, r.horizon,
                                            [&](std::size_t i, double t) { return w.left_limit(i, t); }, r.target, &d2);
    ASSERT_EQ(fast.times, slow.times);
    for (std::size_t k = 0; k < fast.values.size(); ++k) EXPECT_NEAR(fast.values[k], slow.values[k], 1e-12);
    EXPECT_EQ(d1.event_times, d2.event_times);
}

TEST(WeightedKm, NonincreasingWithNonnegativeWeights) {
    const auto data = simulate_system(fixtures::two_group_design(), 2000, 6);
    const auto r = extract_records(data, "G", 1.0, 0.0, "X", "Y");
    const auto c = analyze_two_groups(r, 0.2);
    for (const auto* curve : {&c.observed_target, &c.reweighted_target, &c.reference}) {
        EXPECT_EQ(curve->values.front(), 0.0);
        for (std::size_t k = 1; k < curve->values.size(); ++k) {
            EXPECT_GE(curve->values[k], curve->values[k - 1]);
            EXPECT_LE(curve->values[k], 1.0);
        }
    }
    for (double v : c.contrast.values) EXPECT_TRUE(v >= -1.0 && v <= 1.0);
}

TEST(Curves, IncidenceAndContrast) {
    EXPECT_EQ(cumulative_incidence(StepCurve::constant(1.0)).value(3.0), 0.0);
    const StepCurve s{{0.0, 1.0}, {1.0, 0.0}};
    EXPECT_EQ(cumulative_incidence(s).value(1.0), 1.0);
    const StepCurve a = StepCurve::constant(0.3), b = StepCurve::constant(0.1);
    EXPECT_DOUBLE_EQ(contrast(a, b).value(0.7), 0.2);
    const StepCurve x{{0.0, 0.5, 1.0}, {0.0, 0.2, 0.4}};
    const StepCurve y{{0.0, 0.7}, {0.0, 0.1}};
    const auto d = contrast(x, y);
    EXPECT_EQ(d.times, (std::vector<double>{0.0, 0.5, 0.7, 1.0}));
    EXPECT_DOUBLE_EQ(d.value(0.8), 0.1);
    for (double v : contrast(x, x).values) EXPECT_EQ(v, 0.0);
}

TEST(Estimation, StoppedDataGiveIdenticalEstimates) {
    const auto data = simulate_system(builtin_hpv_scenario(), 1736, 8);
    const auto stopped = stop_at_censoring(data);
    const auto a = analyze_two_groups(extract_records(data, "TestType", 1, 0, "Nx", "Ny"), 0.5);
    const auto b = analyze_two_groups(extract_records(stopped, "TestType", 1, 0, "Nx", "Ny"), 0.5);
    for (const auto& [x, y] : {std::pair{&a.observed_target, &b.observed_target},
                               std::pair{&a.reweighted_target, &b.reweighted_target},
                               std::pair{&a.reference, &b.reference}, std::pair{&a.contrast, &b.contrast}}) {
        EXPECT_EQ(x->times, y->times);
        EXPECT_EQ(x->values, y->values);
    }
}

TEST(Estimation, UnitWeightsGiveObservedCurve) {
    const auto data = simulate_system(fixtures::two_group_design(), 1000, 9);
    const auto c = analyze_two_groups(extract_records(data, "G", 1, 0, "X", "Y"), unit);
    EXPECT_EQ(c.observed_target.times, c.reweighted_target.times);
    for (std::size_t k = 0; k < c.observed_target.values.size(); ++k)
        EXPECT_NEAR(c.observed_target.values[k], c.reweighted_target.values[k], 1e-12);
}

TEST(Estimation, ExactWeightsRecoverInterventionalSurvival) {
    const auto spec = fixtures::two_group_design();
    const auto data = simulate_system(spec, 20000, 10);
    const auto r = extract_records(data, "G", 1, 0, "X", "Y");
    // target treatment rate 2 replaced by the reference rate 1
    std::vector<WeightTrajectory> w;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto& s = data.subjects[i];
        w.push_back(r.target[i] ? exact_weights(data, s, "X", spec.intensities.at("X"), PathFunctional::constant(0.5),
                                                {}, s.censoring_time)
                                : WeightTrajectory::constant());
    }
    const auto c = analyze_two_groups(r, [&](std::size_t i, double t) { return w[i].left_limit(t); });
    double sup = 0;
    for (double t = 0; t <= 1.0; t += 0.01)
        sup = std::max(sup, std::abs(c.reweighted_target.value(t) - (1 - fixtures::two_group_survival(1.0, t))));
    EXPECT_LT(sup, 0.03);
    double obs = 0;
    for (double t = 0; t <= 1.0; t += 0.01)
        obs = std::max(obs, std::abs(c.observed_target.value(t) - (1 - fixtures::two_group_survival(2.0, t))));
    EXPECT_LT(obs, 0.03);
}

TEST(Estimation, DataDrivenWeightsRecoverInterventionalSurvival) {
    const auto data = simulate_system(fixtures::two_group_design(), 20000, 11);
    const auto c = analyze_two_groups(extract_records(data, "G", 1, 0, "X", "Y"), default_bandwidth(20000, 1.0));
    double sup = 0;
    for (double t = 0; t <= 1.0; t += 0.01)
        sup = std::max(sup, std::abs(c.reweighted_target.value(t) - (1 - fixtures::two_group_survival(1.0, t))));
    EXPECT_LT(sup, 0.03);
}

TEST(Estimation, RecordsFollowGroupValues) {
    const auto data = simulate_system(fixtures::two_group_design(), 10, 1);
    const auto r = extract_records(data, "G", 1, 0, "X", "Y");
    EXPECT_EQ(std::count(r.target.begin(), r.target.end(), 1), 5);
    EXPECT_EQ(std::count(r.reference.begin(), r.reference.end(), 1), 5);
    const std::vector<std::size_t> idx{0, 0, 9};
    const auto s = r.select(idx);
    EXPECT_EQ(s.ids, (std::vector<std::string>{r.ids[0], r.ids[0], r.ids[9]}));
    EXPECT_THROW(extract_records(data, "X", 1, 0, "X", "Y"), DatasetError);
    auto only_target = r;
    std::fill(only_target.reference.begin(), only_target.reference.end(), 0);
    EXPECT_THROW(analyze_two_groups(only_target, 0.2), EmptyGroup);
}

// ---------------------------------------------------------------------------

TEST(Quantile, TypeSeven) {
    const std::vector<double> v{1, 2, 3, 4};
    EXPECT_DOUBLE_EQ(quantile_sorted(v, 0.25), 1.75);
    EXPECT_DOUBLE_EQ(quantile_sorted(v, 0.0), 1.0);
    EXPECT_DOUBLE_EQ(quantile_sorted(v, 1.0), 4.0);
    EXPECT_DOUBLE_EQ(quantile_sorted(v, 0.975), 3.925);
}

TEST(Bootstrap, GridIsThinnedAndKeepsExtraTimes) {
    StepCurve c;
    for (int k = 0; k < 2000; ++k) c.times.push_back(k * 0.001), c.values.push_back(0);
    const auto g = band_grid(c, 512, {0.5005, 3.0});
    EXPECT_LE(g.size(), 514u);
    EXPECT_TRUE(std::binary_search(g.begin(), g.end(), 0.5005));
    EXPECT_TRUE(std::binary_search(g.begin(), g.end(), 3.0));
    EXPECT_EQ(g.front(), 0.0);
    EXPECT_EQ(g.back(), 3.0);
    EXPECT_EQ(band_grid(StepCurve::constant(0), 512, {}).size(), 1u);
}

TwoGroupRecords small_records(std::size_t n, std::uint64_t seed) {
    return extract_records(simulate_system(fixtures::two_group_design(), n, seed), "G", 1, 0, "X", "Y");
}

TEST(Bootstrap, DeterministicAcrossThreadCounts) {
    const auto r = small_records(400, 12);
    const auto point = analyze_two_groups(r, 0.3).contrast;
    auto pipeline = [&](std::span<const std::size_t> idx) { return analyze_two_groups(r.select(idx), 0.3).contrast; };
    const auto a = bootstrap_bands(pipeline, r.size(), point, 60, 0.95, 77, {.threads = 1});
    const auto b = bootstrap_bands(pipeline, r.size(), point, 60, 0.95, 77, {.threads = 4});
    EXPECT_EQ(a.lower, b.lower);
    EXPECT_EQ(a.upper, b.upper);
    EXPECT_EQ(a.times, b.times);
    const auto c = bootstrap_bands(pipeline, r.size(), point, 60, 0.95, 78);
    EXPECT_NE(a.lower, c.lower);
    for (std::size_t k = 0; k < a.times.size(); ++k) {
        EXPECT_LE(a.lower[k], a.point[k]);
        EXPECT_LE(a.point[k], a.upper[k]);
    }
    EXPECT_EQ(a.replicates, 60u);
    EXPECT_EQ(a.level, 0.95);
}

TEST(Bootstrap, IdenticalSubjectsGiveZeroWidth) {
    // five copies of one subject: every resample is the same dataset
    const std::vector<double> y(5, 0.4), c(5, kNever);
    auto pipeline = [&](std::span<const std::size_t> idx) {
        std::vector<double> ys, cs;
        for (std::size_t i : idx) ys.push_back(y[i]), cs.push_back(c[i]);
        return cumulative_incidence(weighted_kaplan_meier(ys, cs, 1.0, unit));
    };
    const std::vector<std::size_t> all{0, 1, 2, 3, 4};
    const auto band = bootstrap_bands(pipeline, 5, pipeline(all), 10, 0.9, 1);
    for (std::size_t k = 0; k < band.times.size(); ++k) EXPECT_EQ(band.upper[k] - band.lower[k], 0.0);
    EXPECT_EQ(band.degenerate, 0u);
}

TEST(Bootstrap, DegenerateReplicatesAreCounted) {
    const auto r = small_records(40, 13);
    const auto point = analyze_two_groups(r, 0.3).contrast;
    std::size_t calls = 0;
    const auto band = bootstrap_bands(
        [&](std::span<const std::size_t> idx) {
            if (idx.front() == 0 || ++calls % 5 == 0) throw DegenerateReplicate("skip");
            return analyze_two_groups(r.select(idx), 0.3).contrast;
        },
        r.size(), point, 50, 0.9, 3);
    EXPECT_GT(band.degenerate, 0u);
    EXPECT_LT(band.degenerate, 50u);
    EXPECT_THROW(bootstrap_bands([](std::span<const std::size_t>) -> StepCurve { throw DegenerateReplicate("x"); },
                                 10, point, 5, 0.9, 1),
                 DegenerateReplicate);
    EXPECT_THROW(bootstrap_bands([&](std::span<const std::size_t>) { return point; }, 10, point, 1, 0.9, 1),
                 std::invalid_argument);
}

TEST(Bootstrap, DatasetFormMatchesIndexForm) {
    const auto data = simulate_system(fixtures::two_group_design(), 200, 14);
    auto from_data = [](const EventDataset& d) {
        return analyze_two_groups(extract_records(d, "G", 1, 0, "X", "Y"), 0.3).contrast;
    };
    const auto r = extract_records(data, "G", 1, 0, "X", "Y");
    const auto a = bootstrap_bands(from_data, data, 20, 0.95, 5);
    const auto b = bootstrap_bands(
        [&](std::span<const std::size_t> idx) { return analyze_two_groups(r.select(idx), 0.3).contrast; }, r.size(),
        from_data(data), 20, 0.95, 5);
    EXPECT_EQ(a.lower, b.lower);
    EXPECT_EQ(a.upper, b.upper);
}

}  // namespace
}  // namespace locind
