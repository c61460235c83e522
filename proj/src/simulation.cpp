#include "locind/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "locind/format.hpp"
#include "locind/parallel.hpp"
#include "locind/weighting.hpp"

namespace locind {

PathFunctional PathFunctional::constant(double value, std::size_t max_jumps) {
    PathFunctional f;
    f.bound = value;
    f.rate = [value, max_jumps](const LocalView& v) { return v.own_count() < max_jumps ? value : 0.0; };
    f.descriptor = "constant(" + format_double(value) +
                   (max_jumps == SIZE_MAX ? std::string() : "," + std::to_string(max_jumps)) + ")";
    return f;
}

namespace {

std::vector<std::size_t> indices_of(const LocalIndependenceGraph& g, const std::vector<NodeId>& ids) {
    std::vector<std::size_t> out;
    for (const auto& id : ids) out.push_back(g.index_of(id));
    return out;
}

// Baseline nodes in an order where parents come first.
std::vector<std::size_t> baseline_order(const SystemSpec& spec) {
    const auto& g = spec.graph;
    std::vector<std::size_t> order;
    std::vector<int> state(g.size(), 0);
    std::function<void(std::size_t)> visit = [&](std::size_t v) {
        if (state[v]) return;
        state[v] = 1;
        for (std::size_t p : g.in_indices(v))
            if (g.node(p).kind == NodeKind::Baseline) visit(p);
        order.push_back(v);
    };
    for (std::size_t v = 0; v < g.size(); ++v)
        if (g.node(v).kind == NodeKind::Baseline) visit(v);
    return order;
}

void check_rate(double rate, double bound, const NodeId& node, double t) {
    if (!std::isfinite(rate))
        throw NonFiniteRate("non-finite rate for '" + node + "' at t=" + format_double(t), node, t);
    if (rate < 0.0)
        throw NegativeRate("negative rate " + format_double(rate) + " for '" + node + "' at t=" + format_double(t),
                           node, t);
    if (rate > bound)
        throw BoundViolated("rate " + format_double(rate) + " exceeds declared bound " + format_double(bound) +
                                " for '" + node + "' at t=" + format_double(t),
                            node, t);
}

}  // namespace

void validate_spec(const SystemSpec& spec) {
    const auto& g = spec.graph;
    if (!(spec.horizon > 0.0) || !std::isfinite(spec.horizon)) throw SpecError("horizon must be positive and finite");
    for (const auto& n : g.nodes()) {
        const NodeSet parents = g.parents(n.id);
        if (n.kind == NodeKind::Process) {
            const auto it = spec.intensities.find(n.id);
            if (it == spec.intensities.end()) throw SpecError("process '" + n.id + "' has no intensity");
            const auto& f = it->second;
            if (!f.rate) throw SpecError("intensity of '" + n.id + "' has no evaluator");
            if (!(f.bound >= 0.0) || !std::isfinite(f.bound))
                throw SpecError("intensity of '" + n.id + "' needs a finite nonnegative bound");
            for (const auto& d : f.dependencies) {
                g.index_of(d);
                if (d != n.id && !parents.count(d))
                    throw IllegalDependency("intensity of '" + n.id + "' reads '" + d + "', which is not a parent");
            }
            if (spec.baseline.count(n.id)) throw SpecError("process '" + n.id + "' has a baseline sampler");
        } else {
            const auto it = spec.baseline.find(n.id);
            if (it == spec.baseline.end()) throw SpecError("baseline node '" + n.id + "' has no sampler");
            if (!it->second.draw) throw SpecError("sampler of '" + n.id + "' has no draw function");
            for (const auto& p : it->second.parents) {
                g.index_of(p);
                if (!parents.count(p) || g.is_process(p))
                    throw IllegalDependency("sampler of '" + n.id + "' reads '" + p + "', which is not a baseline parent");
            }
            if (spec.intensities.count(n.id)) throw SpecError("baseline node '" + n.id + "' has an intensity");
        }
    }
    for (const auto& [id, _] : spec.intensities)
        if (!g.contains(id)) throw SpecError("intensity for unknown node '" + id + "'");
    for (const auto& [id, _] : spec.baseline)
        if (!g.contains(id)) throw SpecError("sampler for unknown node '" + id + "'");
}

std::map<std::string, std::uint64_t> component_hashes(const SystemSpec& spec) {
    std::map<std::string, std::uint64_t> out;
    for (const auto& [id, s] : spec.baseline) {
        std::string text = s.descriptor + "|";
        for (const auto& p : s.parents) text += p + ",";
        out["baseline:" + id] = fnv1a(text);
    }
    for (const auto& [id, f] : spec.intensities) {
        std::string text = f.descriptor + "|" + format_double(f.bound) + "|";
        for (const auto& d : f.dependencies) text += d + ",";
        out["intensity:" + id] = fnv1a(text);
    }
    if (spec.condition) out["condition"] = fnv1a(spec.condition->descriptor);
    out["horizon"] = fnv1a(format_double(spec.horizon));
    std::string graph_text;
    for (const auto& n : spec.graph.nodes()) graph_text += n.id + (n.kind == NodeKind::Process ? ":p;" : ":b;");
    for (const auto& e : spec.graph.edges()) graph_text += e.from + ">" + e.to + ";";
    out["graph"] = fnv1a(graph_text);
    return out;
}

std::string spec_hash(const SystemSpec& spec) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& [k, v] : component_hashes(spec)) h = fnv1a(k + "=" + hex64(v) + ";", h);
    return hex64(h);
}

// ---------------------------------------------------------------------------

namespace {

struct Compiled {
    const SystemSpec* spec;
    std::vector<std::size_t> baseline_order;
    std::vector<std::vector<std::size_t>> sampler_parents;  // per node
    std::vector<std::size_t> processes;
    std::vector<std::vector<std::size_t>> deps;             // per node
    std::vector<const PathFunctional*> fn;                  // per node
    std::vector<const BaselineSampler*> sampler;            // per node
};

Compiled compile(const SystemSpec& spec) {
    Compiled c;
    c.spec = &spec;
    const auto& g = spec.graph;
    c.baseline_order = baseline_order(spec);
    c.sampler_parents.resize(g.size());
    c.deps.resize(g.size());
    c.fn.assign(g.size(), nullptr);
    c.sampler.assign(g.size(), nullptr);
    for (std::size_t v = 0; v < g.size(); ++v) {
        const auto& id = g.node(v).id;
        if (g.node(v).kind == NodeKind::Process) {
            c.processes.push_back(v);
            c.fn[v] = &spec.intensities.at(id);
            c.deps[v] = indices_of(g, c.fn[v]->dependencies);
        } else {
            c.sampler[v] = &spec.baseline.at(id);
            c.sampler_parents[v] = indices_of(g, c.sampler[v]->parents);
        }
    }
    return c;
}

SubjectPath simulate_subject(const Compiled& c, std::size_t subject, std::size_t n, std::uint64_t seed,
                             const SimulationOptions& options, SimulationLog& log) {
    const auto& spec = *c.spec;
    const auto& g = spec.graph;
    const std::size_t width = g.size();
    SubjectPath path;
    path.id = std::to_string(subject);
    path.baseline.assign(width, std::numeric_limits<double>::quiet_NaN());
    path.jumps.assign(width, {});

    std::vector<Rng> baseline_rng;
    baseline_rng.reserve(width);
    for (std::size_t v = 0; v < width; ++v) baseline_rng.push_back(Rng::stream(seed, subject, v));
    std::vector<double> parent_values;
    for (std::size_t attempt = 0;; ++attempt) {
        if (attempt == options.max_baseline_attempts)
            throw SpecError("baseline condition rejected " + std::to_string(attempt) + " draws for subject " +
                            std::to_string(subject));
        for (std::size_t v : c.baseline_order) {
            parent_values.clear();
            for (std::size_t p : c.sampler_parents[v]) parent_values.push_back(path.baseline[p]);
            BaselineContext ctx{baseline_rng[v], subject, n, parent_values};
            path.baseline[v] = c.sampler[v]->draw(ctx);
            if (!std::isfinite(path.baseline[v]))
                throw SpecError("sampler of '" + g.node(v).id + "' returned a non-finite value");
        }
        if (!spec.condition || spec.condition->accept(path.baseline)) break;
        ++log.baseline_rejections;
    }

    const std::size_t m = c.processes.size();
    std::vector<Rng> rng;
    std::vector<double> candidate(m);
    rng.reserve(m);
    for (std::size_t k = 0; k < m; ++k) {
        rng.push_back(Rng::stream(seed, subject, width + c.processes[k]));
        candidate[k] = rng[k].exponential(c.fn[c.processes[k]]->bound);
    }
    double last = 0.0;
    while (m > 0) {
        const std::size_t k = static_cast<std::size_t>(std::min_element(candidate.begin(), candidate.end()) -
                                                       candidate.begin());
        double t = candidate[k];
        if (t <= last) {
            t = std::nextafter(last, kNever);
            ++log.tie_nudges;
        }
        if (t > spec.horizon) break;
        const std::size_t v = c.processes[k];
        const PathFunctional& f = *c.fn[v];
        const double rate = f.rate(LocalView(path, c.deps[v], v, t));
        check_rate(rate, f.bound, g.node(v).id, t);
        if (rng[k].uniform() * f.bound <= rate) path.jumps[v].push_back(t);
        last = t;
        candidate[k] = t + rng[k].exponential(f.bound);
    }
    if (const auto cens = g.unique_role(Role::Censoring)) path.censoring_time = path.first_jump(g.index_of(*cens));
    return path;
}

}  // namespace

EventDataset simulate_system(const SystemSpec& spec, std::size_t n, std::uint64_t seed,
                             const SimulationOptions& options, SimulationLog* log) {
    if (n == 0) throw SpecError("number of subjects must be at least 1");
    validate_spec(spec);
    const Compiled c = compile(spec);
    EventDataset data = empty_dataset(spec.graph, spec.horizon);
    data.seed = seed;
    data.spec_hash = spec_hash(spec);
    data.subjects.resize(n);
    std::vector<SimulationLog> logs(n);
    parallel_for(n, options.threads,
                 [&](std::size_t i) { data.subjects[i] = simulate_subject(c, i, n, seed, options, logs[i]); });
    if (log) {
        for (const auto& l : logs) {
            log->tie_nudges += l.tie_nudges;
            log->baseline_rejections += l.baseline_rejections;
        }
    }
    return data;
}

namespace {

void check_observed(const SystemSpec& spec, const NodeId& target, const PathFunctional& fn) {
    const auto& g = spec.graph;
    if (!g.contains(target) || !g.is_process(target))
        throw SpecError("intervention target '" + target + "' is not a process");
    for (const auto& d : fn.dependencies) {
        if (!g.contains(d)) throw IllegalDependency("intervention reads unknown node '" + d + "'");
        if (g.has_role(d, Role::Latent))
            throw IllegalDependency("intervention on '" + target + "' reads latent node '" + d + "'");
    }
}

}  // namespace

SystemSpec intervene(const SystemSpec& spec, const NodeId& target, PathFunctional new_intensity) {
    check_observed(spec, target, new_intensity);
    SystemSpec out = spec;
    out.intensities[target] = std::move(new_intensity);
    validate_spec(out);
    return out;
}

SystemSpec intervene_multiplier(const SystemSpec& spec, const NodeId& target, PathFunctional rho) {
    check_observed(spec, target, rho);
    const PathFunctional base = spec.intensities.at(target);
    PathFunctional f;
    f.dependencies = base.dependencies;
    f.dependencies.insert(f.dependencies.end(), rho.dependencies.begin(), rho.dependencies.end());
    f.bound = base.bound * rho.bound;
    f.descriptor = "product(" + base.descriptor + "," + rho.descriptor + ")";
    const std::size_t nb = base.dependencies.size(), nr = rho.dependencies.size();
    f.rate = [base_rate = base.rate, rho_rate = rho.rate, nb, nr](const LocalView& v) {
        return rho_rate(v.subview(nb, nr)) * base_rate(v.subview(0, nb));
    };
    SystemSpec out = spec;
    out.intensities[target] = std::move(f);
    validate_spec(out);
    return out;
}

BoundFunctional::BoundFunctional(const PathFunctional& fn, const EventDataset& data, const NodeId& self)
    : fn_(&fn), self_(data.index_of(self)), name_(self) {
    for (const auto& d : fn.dependencies) deps_.push_back(data.index_of(d));
}

double BoundFunctional::operator()(const SubjectPath& path, double t) const {
    const double rate = fn_->rate(LocalView(path, deps_, self_, t));
    check_rate(rate, fn_->bound, name_, t);
    return rate;
}

// ---------------------------------------------------------------------------

double example_4_3_g(double t, double x, double gamma) {
    return gamma * (1.0 - 2.0 * std::exp(t - x)) /
           ((1.0 + 2.0 * gamma * std::exp(-(x + t))) * (gamma + std::exp(2.0 * t)));
}

double example_4_3_observed_hazard(double t, double gamma) {
    const double e = std::exp(2.0 * t);
    return (2.0 * gamma + e) / (gamma + e);
}

double example_4_3_prevented_hazard(double t, double gamma) {
    const double e = std::exp(t);
    return (2.0 * gamma + e) / (gamma + e);
}

SystemSpec builtin_example_4_3(double gamma, double horizon) {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw InvalidParams("gamma must be positive and finite");
    SystemSpec s;
    s.name = "builtin_4_3";
    s.horizon = horizon;
    s.graph = build_graph({{"U", NodeKind::Baseline, {Role::Latent}},
                           {"N1", NodeKind::Process, {Role::Treatment}},
                           {"N2", NodeKind::Process, {Role::Outcome}}},
                          {{"U", "N1"}, {"U", "N2"}, {"N1", "N2"}});
    const double p = gamma / (1.0 + gamma);
    s.baseline["U"] = {{}, [p](BaselineContext& c) { return c.rng.bernoulli(p) ? 1.0 : 0.0; },
                       "bernoulli(" + format_double(p) + ")"};
    PathFunctional n1;
    n1.dependencies = {"U"};
    n1.bound = 2.0;
    n1.rate = [](const LocalView& v) { return v.own_count() == 0 ? v.value(0) + 1.0 : 0.0; };
    n1.descriptor = "builtin_4_3.N1";
    s.intensities["N1"] = n1;
    PathFunctional n2;
    n2.dependencies = {"U", "N1"};
    n2.bound = 2.0;
    n2.rate = [gamma](const LocalView& v) {
        if (v.own_count() != 0) return 0.0;
        const double u = v.value(0);
        if (v.count(1) == 0) return u + 1.0;
        return u + 1.0 + example_4_3_g(v.time(), v.first_jump(1), gamma);
    };
    n2.descriptor = "builtin_4_3.N2(" + format_double(gamma) + ")";
    s.intensities["N2"] = n2;
    return s;
}

// ---------------------------------------------------------------------------

HpvParams HpvParams::null_scenario() {
    HpvParams p;
    p.sensitivity_target = p.sensitivity_reference;
    return p;
}

void HpvParams::validate() const {
    auto prob = [](double v, const char* name) {
        if (!(v >= 0.0 && v <= 1.0)) throw InvalidParams(std::string(name) + " must lie in [0, 1]");
    };
    auto rate = [](double v, const char* name) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidParams(std::string(name) + " must be finite and >= 0");
    };
    if (n_target + n_reference == 0) throw InvalidParams("group sizes must not both be zero");
    prob(prevalence, "prevalence");
    prob(sensitivity_target, "sensitivity_target");
    prob(sensitivity_reference, "sensitivity_reference");
    prob(false_positive, "false_positive");
    prob(inconclusive_diseased, "inconclusive_diseased");
    prob(inconclusive_healthy, "inconclusive_healthy");
    prob(untested_fraction, "untested_fraction");
    rate(progression_rate, "progression_rate");
    rate(progression_boost, "progression_boost");
    rate(test_rate_target, "test_rate_target");
    rate(test_rate_reference, "test_rate_reference");
    rate(detection_rate, "detection_rate");
    rate(censoring_rate, "censoring_rate");
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw InvalidParams("horizon must be positive");
    // the conditioning event (negative HPV result, inconclusive cytology) needs positive probability
    const double p_event = prevalence * (1.0 - std::max(sensitivity_target, sensitivity_reference)) *
                               inconclusive_diseased +
                           (1.0 - prevalence) * (1.0 - false_positive) * inconclusive_healthy;
    if (!(p_event > 1e-4)) throw InvalidParams("cohort selection event has (near) zero probability");
}

std::size_t hpv_target_count(const HpvParams& p, std::size_t n) {
    const double share = static_cast<double>(p.n_target) / static_cast<double>(p.n_target + p.n_reference);
    return static_cast<std::size_t>(std::llround(share * static_cast<double>(n)));
}

LocalIndependenceGraph hpv_graph() {
    return build_graph({{"LatentDisease", NodeKind::Baseline, {Role::Latent}},
                        {"Cytology", NodeKind::Baseline, {Role::BaselineKeep}},
                        {"TestType", NodeKind::Baseline, {Role::BaselineKeep}},
                        {"HPVResult", NodeKind::Baseline, {Role::BaselineKeep}},
                        {"Progression", NodeKind::Process, {Role::Latent}},
                        {"Nx", NodeKind::Process, {Role::Treatment}},
                        {"Ny", NodeKind::Process, {Role::Outcome}},
                        {"Nc", NodeKind::Process, {Role::Censoring}}},
                       {{"LatentDisease", "HPVResult"},
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
                        {"Ny", "Nc"}});
}

SystemSpec builtin_hpv_scenario(const HpvParams& p) {
    p.validate();
    SystemSpec s;
    s.name = "builtin_hpv";
    s.horizon = p.horizon;
    s.graph = hpv_graph();
    const std::string tag = "(" + format_double(p.prevalence) + "," + format_double(p.sensitivity_target) + "," +
                            format_double(p.sensitivity_reference) + "," + format_double(p.false_positive) + "," +
                            format_double(p.inconclusive_diseased) + "," + format_double(p.inconclusive_healthy) +
                            "," + std::to_string(p.n_target) + "," + std::to_string(p.n_reference) + ")";

    s.baseline["LatentDisease"] = {
        {}, [q = p.prevalence](BaselineContext& c) { return c.rng.bernoulli(q) ? 1.0 : 0.0; },
        "hpv.disease" + tag};
    s.baseline["TestType"] = {{},
                              [p](BaselineContext& c) {
                                  return c.subject < hpv_target_count(p, c.n_subjects) ? 1.0 : 0.0;
                              },
                              "hpv.test_type" + tag};
    s.baseline["Cytology"] = {{"LatentDisease"},
                              [p](BaselineContext& c) {
                                  const double q =
                                      c.parents[0] > 0.5 ? p.inconclusive_diseased : p.inconclusive_healthy;
                                  return c.rng.bernoulli(q) ? 1.0 : 0.0;
                              },
                              "hpv.cytology" + tag};
    s.baseline["HPVResult"] = {{"LatentDisease", "TestType"},
                               [p](BaselineContext& c) {
                                   const double sens =
                                       c.parents[1] > 0.5 ? p.sensitivity_target : p.sensitivity_reference;
                                   const double q = c.parents[0] > 0.5 ? sens : p.false_positive;
                                   return c.rng.bernoulli(q) ? 1.0 : 0.0;
                               },
                               "hpv.result" + tag};
    const std::size_t cyto = s.graph.index_of("Cytology"), result = s.graph.index_of("HPVResult");
    s.condition = BaselineCondition{
        [cyto, result](std::span<const double> b) { return b[cyto] > 0.5 && b[result] < 0.5; },
        "Cytology=1,HPVResult=0"};

    PathFunctional prog;
    prog.dependencies = {"LatentDisease"};
    prog.bound = p.progression_rate;
    prog.rate = [r = p.progression_rate](const LocalView& v) {
        return v.own_count() == 0 && v.value(0) > 0.5 ? r : 0.0;
    };
    prog.descriptor = "hpv.progression(" + format_double(p.progression_rate) + ")";
    s.intensities["Progression"] = prog;

    PathFunctional test;
    test.dependencies = {"TestType"};
    test.bound = std::max(p.test_rate_target, p.test_rate_reference);
    test.rate = [a = p.test_rate_target, r = p.test_rate_reference](const LocalView& v) {
        if (v.own_count() != 0) return 0.0;
        return v.value(0) > 0.5 ? a : r;
    };
    test.descriptor = "hpv.test(" + format_double(p.test_rate_target) + "," + format_double(p.test_rate_reference) + ")";
    s.intensities["Nx"] = test;

    PathFunctional detect;
    detect.dependencies = {"LatentDisease", "Progression", "Nx"};
    detect.bound = p.detection_rate * (1.0 + p.progression_boost);
    detect.rate = [p](const LocalView& v) {
        if (v.own_count() != 0 || v.value(0) < 0.5) return 0.0;
        const double lesion = 1.0 + (v.count(1) > 0 ? p.progression_boost : 0.0);
        const double testing = v.count(2) > 0 ? 1.0 : p.untested_fraction;
        return p.detection_rate * lesion * testing;
    };
    detect.descriptor = "hpv.detect(" + format_double(p.detection_rate) + "," + format_double(p.progression_boost) +
                        "," + format_double(p.untested_fraction) + ")";
    s.intensities["Ny"] = detect;

    PathFunctional cens;
    cens.dependencies = {"Ny"};
    cens.bound = p.censoring_rate;
    cens.rate = [r = p.censoring_rate](const LocalView& v) {
        return v.own_count() == 0 && v.count(0) == 0 ? r : 0.0;
    };
    cens.descriptor = "hpv.censoring(" + format_double(p.censoring_rate) + ")";
    s.intensities["Nc"] = cens;
    validate_spec(s);
    return s;
}

// ---------------------------------------------------------------------------

HazardEstimate estimate_marginal_hazard(const EventDataset& data, const NodeId& process, double bandwidth,
                                        const std::vector<double>& times) {
    if (!(bandwidth > 0.0)) throw NonPositiveBandwidth("bandwidth must be positive");
    if (data.subjects.empty()) throw EmptyRiskSet("dataset has no subjects");
    const CumulativeHazard na = nelson_aalen(data, process);
    HazardEstimate out;
    for (double t : times) {
        const auto lo = std::lower_bound(na.times.begin(), na.times.end(), t - bandwidth);
        const auto hi = std::upper_bound(na.times.begin(), na.times.end(), t + bandwidth);
        double h = 0.0, var = 0.0;
        for (auto it = lo; it != hi; ++it) {
            const std::size_t j = static_cast<std::size_t>(it - na.times.begin());
            const double u = (t - *it) / bandwidth;
            if (std::abs(u) >= 1.0) continue;
            const double k = 0.75 * (1.0 - u * u) / bandwidth;
            h += k * na.increments[j];
            var += k * k * na.events[j] / (na.at_risk[j] * na.at_risk[j]);
        }
        out.times.push_back(t);
        out.hazard.push_back(h);
        out.standard_error.push_back(std::sqrt(var));
    }
    return out;
}

}  // namespace locind
