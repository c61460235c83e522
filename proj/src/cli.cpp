#include "locind/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <filesystem>
#include <sstream>

#include "locind/dataset.hpp"
#include "locind/format.hpp"
#include "locind/graph_io.hpp"
#include "locind/io.hpp"
#include "locind/parallel.hpp"
#include "locind/plot.hpp"
#include "locind/separation.hpp"

namespace locind::cli {

namespace fs = std::filesystem;

namespace {

NodeSet to_set(const std::vector<NodeId>& v) { return {v.begin(), v.end()}; }

std::string resolve(const std::string& base, const std::string& path) {
    return fs::path(path).is_absolute() ? path : (fs::path(base) / path).string();
}

}  // namespace

int cmd_validate(const std::string& graph_file, std::ostream& out) {
    const auto desc = parse_graph_description(load_json_file(graph_file));
    const auto violations = validate_graph(desc.nodes, desc.edges);
    out << nlohmann::json{{"valid", violations.empty()}, {"violations", violations_to_json(violations)}}.dump(2)
        << "\n";
    return violations.empty() ? kSuccess : kNegative;
}

int cmd_query(const std::string& graph_file, const QueryOptions& o, std::ostream& out) {
    const auto graph = load_graph_file(graph_file);
    nlohmann::json report;
    bool verdict = false;
    if (o.kind == "delta_sep") {
        const SeparationQuery q{to_set(o.sources), to_set(o.targets), to_set(o.conditioning)};
        report = {{"query", "delta_sep"}, {"sources", q.sources}, {"targets", q.targets}, {"conditioning", q.conditioning}};
        if (o.fast) {
            validate_query(graph, q);
            verdict = delta_separated_fast(graph, q);
            report["engine"] = "reachability";
        } else {
            TrailOptions topt;
            topt.max_len = o.max_len;
            const auto r = delta_separated(graph, q, topt);
            verdict = r.separated;
            report["engine"] = "reference";
            report["witness"] = r.witness ? to_json(*r.witness) : nlohmann::json();
        }
        report["separated"] = verdict;
    } else if (o.kind == "eliminable") {
        if (o.treatment.empty()) throw InvalidQuery("eliminable needs --treatment");
        report = {{"query", "eliminable"}, {"treatment", o.treatment}, {"observed", to_set(o.observed)}};
        std::optional<EliminabilityWitness> w;
        if (!o.order.empty()) {
            std::vector<NodeSet> blocks;
            for (const auto& b : o.order) blocks.push_back(to_set(b));
            w = check_elimination_order(graph, blocks, o.treatment, to_set(o.observed));
            report["order"] = blocks;
        } else {
            w = eliminable(graph, to_set(o.latent), o.treatment, to_set(o.observed));
            report["latent"] = to_set(o.latent);
        }
        verdict = w.has_value();
        report["eliminable"] = verdict;
        report["witness"] = w ? to_json(*w) : nlohmann::json();
    } else if (o.kind == "theorem1") {
        const auto r = check_theorem1(graph);
        verdict = r.overall;
        report = to_json(r);
    } else {
        throw InvalidQuery("unknown query type '" + o.kind + "'");
    }
    out << report.dump(2) << "\n";
    return verdict ? kSuccess : kNegative;
}

std::map<NodeId, std::set<Role>> parse_role_overrides(const std::vector<std::string>& items) {
    std::map<NodeId, std::set<Role>> out;
    for (const auto& item : items) {
        const auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0) throw ParseError("role override '" + item + "' is not node=role");
        std::set<Role> roles;
        std::stringstream s(item.substr(eq + 1));
        std::string token;
        while (std::getline(s, token, '+'))
            if (!token.empty()) roles.insert(parse_role(token));
        out[item.substr(0, eq)] = roles;
    }
    return out;
}

LocalIndependenceGraph apply_role_overrides(const LocalIndependenceGraph& graph,
                                            const std::map<NodeId, std::set<Role>>& overrides) {
    LocalIndependenceGraph g = graph;
    for (const auto& [id, roles] : overrides) {
        if (!g.contains(id)) throw UnknownNodeError(id);
        g = with_roles(g, id, roles);
    }
    return g;
}

int cmd_identify(const std::string& graph_file, const std::map<NodeId, std::set<Role>>& overrides,
                 std::ostream& out) {
    const auto graph = apply_role_overrides(load_graph_file(graph_file), overrides);
    const auto report = check_theorem1(graph);
    out << to_json(report).dump(2) << "\n";
    return report.overall ? kSuccess : kNegative;
}

int cmd_simulate(const std::string& spec_file, std::size_t n, std::uint64_t seed, const std::string& out_dir,
                 unsigned threads, std::ostream& out) {
    if (n == 0) throw InvalidParams("n must be positive");
    if (out_dir.empty()) throw InputError("simulate needs --out");
    const auto spec = load_spec_file(spec_file);
    SimulationOptions opt;
    opt.threads = threads;
    SimulationLog log;
    const auto data = simulate_system(spec, n, seed, opt, &log);
    write_dataset(data, out_dir);
    out << nlohmann::json{{"n", data.size()},
                          {"seed", seed},
                          {"spec_hash", data.spec_hash},
                          {"horizon", data.horizon},
                          {"tie_nudges", log.tie_nudges},
                          {"baseline_rejections", log.baseline_rejections},
                          {"out", out_dir}}
               .dump(2)
        << "\n";
    return kSuccess;
}

std::vector<WeightTrajectory> exact_group_weights(const SystemSpec& spec, const EventDataset& data,
                                                  const NodeId& group_node, double target_value,
                                                  double reference_value, const NodeId& treatment,
                                                  unsigned threads) {
    const auto it = spec.intensities.find(treatment);
    if (it == spec.intensities.end()) throw SpecError("spec has no intensity for '" + treatment + "'");
    const PathFunctional& lambda = it->second;
    const std::size_t g = data.index_of(group_node), self = data.index_of(treatment);
    std::vector<std::size_t> deps;
    for (const auto& d : lambda.dependencies) deps.push_back(data.index_of(d));

    std::vector<WeightTrajectory> out(data.size(), WeightTrajectory::constant());
    parallel_for(data.size(), threads, [&](std::size_t i) {
        const SubjectPath& path = data.subjects[i];
        if (path.baseline[g] != target_value) return;
        SubjectPath swapped = path;
        swapped.baseline[g] = reference_value;
        PathFunctional rho;
        rho.dependencies = lambda.dependencies;
        rho.bound = DBL_MAX;
        rho.descriptor = "group-swap";
        rho.rate = [&lambda, &deps, &swapped, self, &treatment](const LocalView& v) {
            const double now = lambda.rate(v);
            const double ref = lambda.rate(LocalView(swapped, deps, self, v.time()));
            if (now > 0.0) return ref / now;
            if (ref > 0.0)
                throw NegativeRho("reference intensity is positive where the observed one is zero", treatment,
                                  v.time());
            return 1.0;
        };
        out[i] = exact_weights(data, path, treatment, lambda, rho, {}, path.censoring_time);
    });
    return out;
}

int cmd_weights(const std::string& data_dir, const WeightsOptions& o, const std::string& out_dir, unsigned threads,
                std::ostream& out) {
    if (out_dir.empty()) throw InputError("weights needs --out");
    const auto data = read_dataset(data_dir);
    const std::size_t g = data.index_of(o.group_node);
    data.index_of(o.treatment);
    std::vector<std::string> ids;
    for (const auto& s : data.subjects) ids.push_back(s.id);
    std::vector<WeightTrajectory> w;
    std::vector<char> flags;
    std::vector<double> flag_from;
    nlohmann::json diag;
    if (o.spec_file) {
        w = exact_group_weights(load_spec_file(*o.spec_file), data, o.group_node, o.target_value, o.reference_value,
                                o.treatment, threads);
        diag["mode"] = "exact";
    } else {
        const double b = o.bandwidth.value_or(default_bandwidth(data.size(), data.horizon));
        AhwOptions aopt;
        aopt.truncation_quantile = o.truncation_quantile;
        const auto ahw = estimate_weights_ahw(
            data, [&](const SubjectPath& s) { return s.baseline[g] == o.target_value; },
            [&](const SubjectPath& s) { return s.baseline[g] == o.reference_value; }, o.treatment, b, aopt);
        for (std::size_t i = 0; i < data.size(); ++i) {
            w.push_back(ahw.trajectory(i, {}));
            flags.push_back(ahw.theta_flagged[i]);
            flag_from.push_back(ahw.switch_time[i]);
        }
        diag["mode"] = "theta";
        diag["bandwidth"] = b;
        diag["theta_flags"] = ahw.theta_flags;
        diag["truncated"] = ahw.truncated;
    }
    std::vector<WeightTrajectory> target;
    for (std::size_t i = 0; i < data.size(); ++i)
        if (data.subjects[i].baseline[g] == o.target_value) target.push_back(w[i]);
    std::vector<double> grid;
    for (int k = 1; k <= 10; ++k) grid.push_back(data.horizon * k / 10.0);
    diag["target_weights"] = weight_diagnostics(target, grid);
    diag["n"] = data.size();
    diag["n_target"] = target.size();

    fs::create_directories(out_dir);
    write_weights_csv((fs::path(out_dir) / "weights.csv").string(), ids, w, flags, flag_from);
    write_text_file((fs::path(out_dir) / "weights_diagnostics.json").string(), diag.dump(2) + "\n");
    out << diag.dump(2) << "\n";
    return kSuccess;
}

int cmd_estimate(const std::string& data_dir, const EstimateOptions& o, const std::string& out_dir,
                 std::ostream& out) {
    if (out_dir.empty()) throw InputError("estimate needs --out");
    const auto data = read_dataset(data_dir);
    const std::size_t y = data.index_of(o.outcome);
    std::vector<char> include(data.size(), 1);
    if (o.group_node) {
        const std::size_t g = data.index_of(*o.group_node);
        for (std::size_t i = 0; i < data.size(); ++i) include[i] = data.subjects[i].baseline[g] == o.group_value;
    }
    std::vector<WeightTrajectory> w(data.size(), WeightTrajectory::constant());
    if (o.weights_file) {
        auto table = read_weights_csv(*o.weights_file);
        for (std::size_t i = 0; i < data.size(); ++i) {
            if (!include[i]) continue;
            const auto it = table.find(data.subjects[i].id);
            if (it == table.end())
                throw InputError(*o.weights_file + ": no weights for subject '" + data.subjects[i].id + "'");
            w[i] = std::move(it->second);
        }
    }
    std::vector<double> outcome, censoring;
    for (const auto& s : data.subjects) {
        outcome.push_back(s.first_jump(y));
        censoring.push_back(s.censoring_time);
    }
    KaplanMeierDiagnostics diag;
    const auto km = weighted_kaplan_meier(
        outcome, censoring, data.horizon, [&](std::size_t i, double t) { return w[i].left_limit(t); }, include,
        &diag);
    const auto incidence = cumulative_incidence(km);
    fs::create_directories(out_dir);
    write_curve_csv((fs::path(out_dir) / "survival.csv").string(), km);
    write_curve_csv((fs::path(out_dir) / "incidence.csv").string(), incidence);
    const auto report = to_json(diag);
    write_text_file((fs::path(out_dir) / "km_diagnostics.json").string(), report.dump(2) + "\n");
    if (o.svg)
        write_text_file((fs::path(out_dir) / "incidence.svg").string(),
                        step_plot_svg({{"incidence", incidence}}, data.horizon, "Cumulative incidence of " + o.outcome,
                                      "proportion"));
    out << report.dump(2) << "\n";
    return kSuccess;
}

// ---------------------------------------------------------------------------

AnalysisConfig parse_analysis_config(const nlohmann::json& doc, const std::string& base_dir) {
    static const std::set<std::string> keys{"graph",     "spec",        "n",          "data",
                                            "events",    "baseline",    "horizon",    "roles",
                                            "group_node", "target_value", "reference_value", "treatment",
                                            "outcome",   "bandwidth",   "truncation_quantile", "weights",
                                            "replicates", "level",      "max_grid",   "seed",
                                            "out",       "svg",         "force"};
    if (!doc.is_object()) throw ParseError("analysis config must be a JSON object");
    for (const auto& [k, _] : doc.items())
        if (!keys.count(k)) throw ParseError("analysis config: unknown key '" + k + "'");
    AnalysisConfig c;
    try {
        if (doc.contains("graph")) c.graph_file = resolve(base_dir, doc["graph"].get<std::string>());
        if (doc.contains("spec")) {
            if (doc["spec"].is_string()) {
                const auto path = resolve(base_dir, doc["spec"].get<std::string>());
                c.spec = nlohmann::json::parse(read_text_file(path));
                c.spec_dir = fs::path(path).parent_path().string();
            } else {
                c.spec = doc["spec"];
                c.spec_dir = base_dir;
            }
        }
        c.n = doc.value("n", std::size_t{0});
        if (doc.contains("data")) c.data_dir = resolve(base_dir, doc["data"].get<std::string>());
        if (doc.contains("events")) c.events_csv = resolve(base_dir, doc["events"].get<std::string>());
        if (doc.contains("baseline")) c.baseline_csv = resolve(base_dir, doc["baseline"].get<std::string>());
        if (doc.contains("horizon")) c.horizon = doc["horizon"].get<double>();
        if (doc.contains("roles")) {
            for (const auto& [id, roles] : doc["roles"].items()) {
                std::set<Role> set;
                for (const auto& r : roles) set.insert(parse_role(r.get<std::string>()));
                c.roles[id] = set;
            }
        }
        if (!doc.contains("group_node")) throw ParseError("analysis config needs 'group_node'");
        c.group_node = doc["group_node"].get<std::string>();
        c.target_value = doc.value("target_value", 1.0);
        c.reference_value = doc.value("reference_value", 0.0);
        if (doc.contains("treatment")) c.treatment = doc["treatment"].get<std::string>();
        if (doc.contains("outcome")) c.outcome = doc["outcome"].get<std::string>();
        if (doc.contains("bandwidth")) c.bandwidth = doc["bandwidth"].get<double>();
        c.truncation_quantile = doc.value("truncation_quantile", 0.0);
        if (doc.contains("weights")) {
            const auto m = doc["weights"].get<std::string>();
            if (m == "theta")
                c.weights = WeightMode::Theta;
            else if (m == "exact")
                c.weights = WeightMode::Exact;
            else
                throw ParseError("analysis config: weights must be 'theta' or 'exact'");
        }
        c.replicates = doc.value("replicates", std::size_t{400});
        c.level = doc.value("level", 0.95);
        c.max_grid = doc.value("max_grid", std::size_t{512});
        if (doc.contains("seed")) c.seed = doc["seed"].get<std::uint64_t>();
        if (doc.contains("out")) c.out_dir = resolve(base_dir, doc["out"].get<std::string>());
        c.svg = doc.value("svg", false);
        c.force = doc.value("force", false);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("analysis config: ") + e.what());
    }
    const int sources = int(c.data_dir.has_value()) + int(c.events_csv.has_value()) + int(c.spec && !c.data_dir && !c.events_csv);
    if (sources == 0) throw ParseError("analysis config needs 'data', 'events'/'baseline' or 'spec'");
    if (c.data_dir && c.events_csv) throw ParseError("analysis config: give 'data' or 'events', not both");
    if (c.events_csv.has_value() != c.baseline_csv.has_value())
        throw ParseError("analysis config: 'events' and 'baseline' go together");
    if (c.events_csv && !c.horizon) throw ParseError("analysis config: CSV input needs 'horizon'");
    if (!c.graph_file && !c.spec) throw ParseError("analysis config needs 'graph' or 'spec'");
    if (c.weights == WeightMode::Exact && !c.spec) throw ParseError("exact weights need a 'spec'");
    if (!(c.level > 0.0 && c.level < 1.0)) throw ParseError("analysis config: level must lie in (0, 1)");
    return c;
}

AnalysisConfig load_analysis_config(const std::string& path) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path + ": " + e.what());
    }
    return parse_analysis_config(doc, fs::path(path).parent_path().string());
}

int cmd_analyze(const AnalysisConfig& c, unsigned threads, std::ostream& out, std::ostream& err) {
    if (!c.seed) throw InputError("analysis needs a seed (config 'seed' or --seed)");
    if (c.out_dir.empty()) throw InputError("analysis needs an output directory (config 'out' or --out)");
    const std::uint64_t seed = *c.seed;

    std::optional<SystemSpec> spec;
    if (c.spec) spec = parse_spec(*c.spec, c.spec_dir);
    const LocalIndependenceGraph graph =
        apply_role_overrides(c.graph_file ? load_graph_file(*c.graph_file) : spec->graph, c.roles);

    // identification first
    const auto report = check_theorem1(graph);
    fs::create_directories(c.out_dir);
    const fs::path dir(c.out_dir);
    write_text_file((dir / "identify.json").string(), to_json(report).dump(2) + "\n");
    if (!report.overall && !c.force) {
        out << to_json(report).dump(2) << "\n";
        err << "effect is not identified from the observable processes; rerun with --force to estimate anyway\n";
        return kNegative;
    }
    if (!report.overall) err << "WARNING: effect is not identified; estimating anyway because of --force\n";

    EventDataset data;
    if (c.data_dir) {
        data = read_dataset(*c.data_dir);
    } else if (c.events_csv) {
        data = read_dataset_csv(*c.events_csv, *c.baseline_csv, graph, *c.horizon);
    } else {
        if (c.n == 0) throw InvalidParams("analysis config: 'n' must be positive to simulate");
        SimulationOptions opt;
        opt.threads = threads;
        data = simulate_system(*spec, c.n, seed, opt);
        write_dataset(data, (dir / "data").string());
    }

    const NodeId treatment = c.treatment.value_or(report.roles.treatment);
    NodeId outcome;
    if (c.outcome) {
        outcome = *c.outcome;
    } else if (report.roles.outcomes.size() == 1) {
        outcome = *report.roles.outcomes.begin();
    } else {
        throw MissingRole("several outcome processes; name one with 'outcome'");
    }
    const auto records = extract_records(data, c.group_node, c.target_value, c.reference_value, treatment, outcome);
    const WeightMode mode = c.weights.value_or(spec ? WeightMode::Exact : WeightMode::Theta);
    const double bandwidth = c.bandwidth.value_or(default_bandwidth(data.size(), data.horizon));
    AhwOptions aopt;
    aopt.truncation_quantile = c.truncation_quantile;

    nlohmann::json diag;
    TwoGroupCurves curves;
    std::vector<WeightTrajectory> exact;
    std::vector<WeightTrajectory> target_weights;
    std::vector<double> weight_grid;
    for (int k = 1; k <= 10; ++k) weight_grid.push_back(data.horizon * k / 10.0);
    if (mode == WeightMode::Exact) {
        exact = exact_group_weights(*spec, data, c.group_node, c.target_value, c.reference_value, treatment, threads);
        curves = analyze_two_groups(records, [&](std::size_t i, double t) { return exact[i].left_limit(t); });
        for (std::size_t i = 0; i < records.size(); ++i)
            if (records.target[i]) target_weights.push_back(exact[i]);
        diag["weights"] = "exact";
    } else {
        AhwWeights w;
        curves = analyze_two_groups(records, bandwidth, aopt, &w);
        for (std::size_t i = 0; i < records.size(); ++i)
            if (records.target[i]) target_weights.push_back(w.trajectory(i, {}));
        diag["weights"] = "theta";
        diag["bandwidth"] = bandwidth;
        diag["theta_flags"] = w.theta_flags;
        diag["truncated"] = w.truncated;
    }

    ResamplePipeline pipeline;
    if (mode == WeightMode::Exact) {
        pipeline = [&](std::span<const std::size_t> idx) {
            const auto sub = records.select(idx);
            return analyze_two_groups(sub, [&](std::size_t i, double t) { return exact[idx[i]].left_limit(t); })
                .contrast;
        };
    } else {
        pipeline = [&](std::span<const std::size_t> idx) {
            return analyze_two_groups(records.select(idx), bandwidth, aopt).contrast;
        };
    }
    BootstrapOptions bopt;
    bopt.threads = threads;
    bopt.max_grid = c.max_grid;
    bopt.extra_times = {data.horizon / 2.0};
    const auto band = bootstrap_bands(pipeline, records.size(), curves.contrast, c.replicates, c.level, seed, bopt);

    write_curve_csv((dir / "observed_incidence.csv").string(), curves.observed_target);
    write_curve_csv((dir / "reweighted_incidence.csv").string(), curves.reweighted_target);
    write_curve_csv((dir / "reference_incidence.csv").string(), curves.reference);
    write_curve_csv((dir / "contrast.csv").string(), curves.contrast);
    write_band_csv((dir / "contrast_band.csv").string(), band);

    std::size_t n_target = 0, n_reference = 0;
    for (std::size_t i = 0; i < records.size(); ++i) n_target += records.target[i], n_reference += records.reference[i];
    diag["forced"] = !report.overall;
    diag["identified"] = report.overall;
    diag["seed"] = seed;
    diag["spec_hash"] = data.spec_hash;
    diag["n"] = data.size();
    diag["n_target"] = n_target;
    diag["n_reference"] = n_reference;
    diag["horizon"] = data.horizon;
    diag["group_node"] = c.group_node;
    diag["treatment"] = treatment;
    diag["outcome"] = outcome;
    diag["reweighted_km"] = to_json(curves.reweighted_diagnostics);
    diag["target_weights"] = weight_diagnostics(target_weights, weight_grid);
    diag["bootstrap"] = {{"replicates", band.replicates},
                         {"degenerate", band.degenerate},
                         {"level", band.level},
                         {"grid_points", band.times.size()}};
    const double mid = data.horizon / 2.0;
    const auto at = std::lower_bound(band.times.begin(), band.times.end(), mid) - band.times.begin();
    if (static_cast<std::size_t>(at) < band.times.size())
        diag["contrast_at_half_horizon"] = {{"time", mid},
                                            {"value", band.point[at]},
                                            {"lower", band.lower[at]},
                                            {"upper", band.upper[at]}};
    write_text_file((dir / "diagnostics.json").string(), diag.dump(2) + "\n");

    if (c.svg) {
        const std::string tag = report.overall ? "" : " [NOT IDENTIFIED, forced]";
        write_text_file((dir / "incidence.svg").string(),
                        step_plot_svg({{"observed target", curves.observed_target, "#d62728"},
                                       {"re-weighted target", curves.reweighted_target, "#1f77b4"},
                                       {"reference", curves.reference, "#2ca02c"}},
                                      data.horizon, "Cumulative incidence of " + outcome + tag, "proportion"));
        write_text_file((dir / "contrast.svg").string(),
                        step_plot_svg({{"contrast", curves.contrast, "#1f77b4"}}, data.horizon,
                                      "Re-weighted target minus reference" + tag, "difference", &band));
    }
    out << diag.dump(2) << "\n";
    return kSuccess;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

template <class Body>
int guarded(Body&& body, std::ostream& err) {
    try {
        return body();
    } catch (const GraphError& e) {
        err << "error: " << e.what() << "\n" << violations_to_json(e.violations()).dump(2) << "\n";
        return kInputError;
    } catch (const RateError& e) {
        err << "estimation error: " << e.what() << " (node " << e.node() << ", t = " << e.time() << ")\n";
        return kEstimationError;
    } catch (const ZeroWeightedRiskSet& e) {
        err << "estimation error: " << e.what() << " (t = " << e.time() << ")\n";
        return kEstimationError;
    } catch (const EmptyGroup& e) {
        err << "estimation error: " << e.what() << "\n";
        return kEstimationError;
    } catch (const DegenerateReplicate& e) {
        err << "estimation error: " << e.what() << "\n";
        return kEstimationError;
    } catch (const EmptyRiskSet& e) {
        err << "estimation error: " << e.what() << "\n";
        return kEstimationError;
    } catch (const LimitExceeded& e) {
        err << "error: " << e.what() << "\n";
        return kEstimationError;
    } catch (const HeuristicInconclusive& e) {
        err << "error: " << e.what() << "\n";
        return kEstimationError;
    } catch (const std::invalid_argument& e) {
        err << "input error: " << e.what() << "\n";
        return kInputError;
    } catch (const ParseError& e) {
        err << "input error: " << e.what() << "\n";
        return kInputError;
    } catch (const InputError& e) {
        err << "input error: " << e.what() << "\n";
        return kInputError;
    } catch (const DatasetError& e) {
        err << "input error: " << e.what() << "\n";
        return kInputError;
    } catch (const nlohmann::json::exception& e) {
        err << "input error: " << e.what() << "\n";
        return kInputError;
    } catch (const fs::filesystem_error& e) {
        err << "input error: " << e.what() << "\n";
        return kInputError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kEstimationError;
    }
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Local independence graphs: identification checks, simulation and re-weighted estimation"};
    app.fallthrough();
    app.require_subcommand(1);
    std::optional<std::uint64_t> seed;
    unsigned threads = 1;
    std::string out_dir;
    app.add_option("--seed", seed, "master seed");
    app.add_option("--threads", threads, "worker threads (output does not depend on it)")->check(CLI::PositiveNumber);
    app.add_option("--out", out_dir, "output directory");

    std::string graph_file;
    auto* validate = app.add_subcommand("validate", "check a graph file against the structural rules");
    validate->add_option("graph", graph_file, "graph JSON")->required();

    QueryOptions q;
    std::string sources, targets, conditioning, latent, observed;
    std::vector<std::string> order;
    auto* query = app.add_subcommand("query", "separation, eliminability or identification query");
    query->add_option("graph", graph_file, "graph JSON")->required();
    query->add_option("--type", q.kind, "delta_sep | eliminable | theorem1")
        ->check(CLI::IsMember({"delta_sep", "eliminable", "theorem1"}));
    query->add_option("--sources", sources, "comma-separated source nodes (B)");
    query->add_option("--targets", targets, "comma-separated target nodes (A)");
    query->add_option("--conditioning", conditioning, "comma-separated conditioning nodes (C)");
    query->add_option("--latent", latent, "comma-separated latent nodes to eliminate");
    query->add_option("--observed", observed, "comma-separated observed nodes other than the treatment");
    query->add_option("--treatment", q.treatment, "treatment process");
    query->add_option("--order", order, "one block of a proposed elimination order, comma-separated (repeatable)");
    query->add_flag("--fast", q.fast, "reachability engine (no witness)");
    query->add_option("--max-len", q.max_len, "maximum trail length");

    std::vector<std::string> role_items;
    auto* identify = app.add_subcommand("identify", "check the identification conditions");
    identify->add_option("graph", graph_file, "graph JSON")->required();
    identify->add_option("--role", role_items, "role override node=role[+role] (repeatable)");

    std::string spec_file;
    std::size_t n = 0;
    auto* simulate = app.add_subcommand("simulate", "simulate a dataset from a spec");
    simulate->add_option("spec", spec_file, "spec JSON")->required();
    simulate->add_option("--n", n, "number of subjects")->required();

    std::string data_dir;
    WeightsOptions wo;
    std::string weights_spec;
    auto* weights = app.add_subcommand("weights", "estimate per-subject weights");
    weights->add_option("data", data_dir, "dataset directory")->required();
    weights->add_option("--group", wo.group_node, "baseline node splitting the groups")->required();
    weights->add_option("--target-value", wo.target_value, "group value of the target group");
    weights->add_option("--reference-value", wo.reference_value, "group value of the reference group");
    weights->add_option("--treatment", wo.treatment, "treatment process")->required();
    weights->add_option("--bandwidth", wo.bandwidth, "smoothing bandwidth (default n^-1/4 times the horizon)");
    weights->add_option("--truncate", wo.truncation_quantile, "clamp weights to [q, 1-q] quantiles");
    weights->add_option("--spec", weights_spec, "spec with the generating intensities (exact weights)");

    EstimateOptions eo;
    std::string group_node, weights_file;
    auto* estimate = app.add_subcommand("estimate", "weighted Kaplan-Meier and cumulative incidence");
    estimate->add_option("data", data_dir, "dataset directory")->required();
    estimate->add_option("--outcome", eo.outcome, "outcome process")->required();
    estimate->add_option("--weights", weights_file, "weights CSV");
    estimate->add_option("--group", group_node, "restrict to subjects with this baseline node ...");
    estimate->add_option("--value", eo.group_value, "... equal to this value");
    estimate->add_flag("--svg", eo.svg, "also write an SVG plot");

    std::string config_file;
    bool force = false, svg = false;
    auto* analyze = app.add_subcommand("analyze", "identify, weight, estimate and bootstrap in one run");
    analyze->add_option("config", config_file, "analysis config JSON")->required();
    analyze->add_flag("--force", force, "estimate even when the effect is not identified");
    analyze->add_flag("--svg", svg, "write SVG plots");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kSuccess;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n" << app.help();
        return kInputError;
    }

    return guarded(
        [&]() -> int {
            if (*validate) return cmd_validate(graph_file, out);
            if (*query) {
                q.sources = split_list(sources);
                q.targets = split_list(targets);
                q.conditioning = split_list(conditioning);
                q.latent = split_list(latent);
                q.observed = split_list(observed);
                for (const auto& b : order) q.order.push_back(split_list(b));
                return cmd_query(graph_file, q, out);
            }
            if (*identify) return cmd_identify(graph_file, parse_role_overrides(role_items), out);
            if (*simulate) {
                if (!seed) throw InputError("simulate needs --seed");
                return cmd_simulate(spec_file, n, *seed, out_dir, threads, out);
            }
            if (*weights) {
                if (!weights_spec.empty()) wo.spec_file = weights_spec;
                return cmd_weights(data_dir, wo, out_dir, threads, out);
            }
            if (*estimate) {
                if (!weights_file.empty()) eo.weights_file = weights_file;
                if (!group_node.empty()) eo.group_node = group_node;
                return cmd_estimate(data_dir, eo, out_dir, out);
            }
            auto config = load_analysis_config(config_file);
            if (seed) config.seed = seed;
            if (!out_dir.empty()) config.out_dir = out_dir;
            config.force = config.force || force;
            config.svg = config.svg || svg;
            return cmd_analyze(config, threads, out, err);
        },
        err);
}

}  // namespace locind::cli
