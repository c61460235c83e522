#include "locind/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "locind/format.hpp"
#include "locind/graph_io.hpp"

namespace locind {

namespace fs = std::filesystem;

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write '" + path + "'");
    out << text;
    if (!out) throw InputError("failed writing '" + path + "'");
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read '" + path + "'");
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

namespace {

double parse_number(std::string_view text, const std::string& where) {
    double v = 0.0;
    const auto r = std::from_chars(text.data(), text.data() + text.size(), v);
    if (r.ec != std::errc() || r.ptr != text.data() + text.size())
        throw InputError(where + ": '" + std::string(text) + "' is not a number");
    return v;
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream s(line);
    while (std::getline(s, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

// Rows of a CSV file with the given header; blank lines are skipped.
std::vector<std::vector<std::string>> read_csv(const std::string& path, const std::vector<std::string>& header) {
    std::istringstream in(read_text_file(path));
    std::string line;
    std::vector<std::vector<std::string>> rows;
    bool first = true;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = split(line);
        if (first) {
            if (cells != header) {
                std::string expect;
                for (const auto& h : header) expect += (expect.empty() ? "" : ",") + h;
                throw InputError(path + ": expected header '" + expect + "'");
            }
            first = false;
            continue;
        }
        if (cells.size() != header.size())
            throw InputError(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(header.size()) +
                             " columns");
        rows.push_back(std::move(cells));
    }
    if (first) throw InputError(path + ": missing header");
    return rows;
}

bool is_integer(const std::string& s) {
    return !s.empty() && s.size() < 19 && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

void fill_subjects(EventDataset& d, const std::vector<std::string>& ids, const std::string& events_csv,
                   const std::string& baseline_csv) {
    std::map<std::string, std::size_t> index;
    auto subject = [&](const std::string& id) -> SubjectPath& {
        auto [it, fresh] = index.emplace(id, d.subjects.size());
        if (fresh) {
            SubjectPath p;
            p.id = id;
            p.baseline.assign(d.nodes.size(), std::nan(""));
            p.jumps.assign(d.nodes.size(), {});
            d.subjects.push_back(std::move(p));
        }
        return d.subjects[it->second];
    };
    for (const auto& id : ids) subject(id);
    const bool closed = !ids.empty();

    auto column = [&](const std::string& node, const std::string& where) {
        try {
            return d.index_of(node);
        } catch (const DatasetError&) {
            throw InputError(where + ": unknown node '" + node + "'");
        }
    };
    for (const auto& row : read_csv(events_csv, {"subject_id", "node_id", "event_time"})) {
        const std::string where = events_csv + " (" + row[0] + "," + row[1] + ")";
        if (closed && !index.count(row[0])) throw InputError(where + ": subject not listed in metadata");
        const std::size_t v = column(row[1], where);
        if (d.nodes[v].kind != NodeKind::Process) throw InputError(where + ": events only apply to process nodes");
        const double t = parse_number(row[2], where);
        if (!(t > 0.0) || !std::isfinite(t)) throw InputError(where + ": event times must be positive and finite");
        auto& p = subject(row[0]);
        if (t <= d.horizon) p.jumps[v].push_back(t);
    }
    for (const auto& row : read_csv(baseline_csv, {"subject_id", "node_id", "value"})) {
        const std::string where = baseline_csv + " (" + row[0] + "," + row[1] + ")";
        if (closed && !index.count(row[0])) throw InputError(where + ": subject not listed in metadata");
        const std::size_t v = column(row[1], where);
        if (d.nodes[v].kind != NodeKind::Baseline) throw InputError(where + ": values only apply to baseline nodes");
        auto& p = subject(row[0]);
        if (!std::isnan(p.baseline[v])) throw InputError(where + ": duplicate baseline value");
        p.baseline[v] = parse_number(row[2], where);
    }
    const std::optional<std::size_t> cens = d.censoring ? std::optional(d.index_of(*d.censoring)) : std::nullopt;
    for (auto& p : d.subjects) {
        for (std::size_t v = 0; v < d.nodes.size(); ++v) {
            auto& j = p.jumps[v];
            std::sort(j.begin(), j.end());
            if (std::adjacent_find(j.begin(), j.end()) != j.end())
                throw InputError("subject '" + p.id + "' has two jumps of '" + d.nodes[v].id + "' at the same time");
            if (d.nodes[v].kind == NodeKind::Baseline && std::isnan(p.baseline[v]))
                throw InputError("subject '" + p.id + "' has no value for '" + d.nodes[v].id + "'");
        }
        p.censoring_time = cens ? p.first_jump(*cens) : kNever;
    }
    sort_subjects(d);
}

}  // namespace

bool subject_id_less(const std::string& a, const std::string& b) {
    const bool ia = is_integer(a), ib = is_integer(b);
    if (ia && ib) return std::stoull(a) != std::stoull(b) ? std::stoull(a) < std::stoull(b) : a < b;
    if (ia != ib) return ia;
    return a < b;
}

void sort_subjects(EventDataset& data) {
    std::stable_sort(data.subjects.begin(), data.subjects.end(),
                     [](const SubjectPath& x, const SubjectPath& y) { return subject_id_less(x.id, y.id); });
}

void write_dataset(const EventDataset& data, const std::string& dir) {
    fs::create_directories(dir);
    std::string events = "subject_id,node_id,event_time\n", baseline = "subject_id,node_id,value\n";
    nlohmann::json ids = nlohmann::json::array();
    for (const auto& s : data.subjects) {
        ids.push_back(s.id);
        for (std::size_t v = 0; v < data.nodes.size(); ++v) {
            if (data.nodes[v].kind == NodeKind::Baseline)
                baseline += s.id + "," + data.nodes[v].id + "," + format_double(s.baseline[v]) + "\n";
            for (double t : s.jumps[v]) events += s.id + "," + data.nodes[v].id + "," + format_double(t) + "\n";
        }
    }
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : data.nodes) nodes.push_back({{"id", n.id}, {"kind", to_string(n.kind)}});
    nlohmann::json meta = {{"nodes", nodes},
                           {"censoring", data.censoring ? nlohmann::json(*data.censoring) : nlohmann::json()},
                           {"horizon", data.horizon},
                           {"seed", data.seed},
                           {"spec_hash", data.spec_hash},
                           {"n", data.size()},
                           {"subjects", ids}};
    write_text_file((fs::path(dir) / "events.csv").string(), events);
    write_text_file((fs::path(dir) / "baseline.csv").string(), baseline);
    write_text_file((fs::path(dir) / "metadata.json").string(), meta.dump(2) + "\n");
}

EventDataset read_dataset(const std::string& dir) {
    const auto meta_path = (fs::path(dir) / "metadata.json").string();
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(read_text_file(meta_path));
    } catch (const nlohmann::json::exception& e) {
        throw InputError(meta_path + ": " + e.what());
    }
    EventDataset d;
    try {
        for (const auto& n : meta.at("nodes"))
            d.nodes.push_back({n.at("id").get<std::string>(), parse_node_kind(n.at("kind").get<std::string>())});
        std::sort(d.nodes.begin(), d.nodes.end(), [](const NodeColumn& a, const NodeColumn& b) { return a.id < b.id; });
        if (meta.contains("censoring") && !meta["censoring"].is_null())
            d.censoring = meta["censoring"].get<std::string>();
        d.horizon = meta.at("horizon").get<double>();
        d.seed = meta.value("seed", std::uint64_t{0});
        d.spec_hash = meta.value("spec_hash", std::string());
    } catch (const nlohmann::json::exception& e) {
        throw InputError(meta_path + ": " + e.what());
    }
    if (!(d.horizon > 0.0)) throw InputError(meta_path + ": horizon must be positive");
    if (d.censoring) {
        try {
            d.index_of(*d.censoring);
        } catch (const DatasetError&) {
            throw InputError(meta_path + ": censoring node is not listed");
        }
    }
    std::vector<std::string> ids;
    if (meta.contains("subjects")) ids = meta["subjects"].get<std::vector<std::string>>();
    fill_subjects(d, ids, (fs::path(dir) / "events.csv").string(), (fs::path(dir) / "baseline.csv").string());
    if (meta.contains("n") && meta["n"].get<std::size_t>() != d.size())
        throw InputError(meta_path + ": n does not match the number of subjects");
    return d;
}

EventDataset read_dataset_csv(const std::string& events_csv, const std::string& baseline_csv,
                              const LocalIndependenceGraph& graph, double horizon) {
    EventDataset d = empty_dataset(graph, horizon);
    fill_subjects(d, {}, events_csv, baseline_csv);
    return d;
}

// ---------------------------------------------------------------------------

namespace {

void check_keys(const nlohmann::json& doc, const std::set<std::string>& allowed, const std::string& where) {
    if (!doc.is_object()) throw ParseError(where + " must be an object");
    for (const auto& [k, _] : doc.items())
        if (!allowed.count(k)) throw ParseError(where + ": unknown key '" + k + "'");
}

double number(const nlohmann::json& doc, const std::string& key, const std::string& where) {
    if (!doc.contains(key)) throw ParseError(where + ": missing '" + key + "'");
    if (!doc[key].is_number()) throw ParseError(where + ": '" + key + "' must be a number");
    return doc[key].get<double>();
}

double number_or(const nlohmann::json& doc, const std::string& key, double fallback, const std::string& where) {
    return doc.contains(key) ? number(doc, key, where) : fallback;
}

std::size_t max_jumps(const nlohmann::json& doc, const std::string& where) {
    if (!doc.contains("max_jumps")) return SIZE_MAX;
    const double v = number(doc, "max_jumps", where);
    if (!(v >= 0.0) || v != std::floor(v)) throw InvalidParams(where + ": max_jumps must be a nonnegative integer");
    return static_cast<std::size_t>(v);
}

std::vector<std::pair<NodeId, double>> coefficients(const nlohmann::json& doc, const std::string& key,
                                                    const std::string& where) {
    std::vector<std::pair<NodeId, double>> out;
    if (!doc.contains(key)) return out;
    if (!doc[key].is_object()) throw ParseError(where + ": '" + key + "' must map node ids to numbers");
    for (const auto& [k, v] : doc[key].items()) {
        if (!v.is_number()) throw ParseError(where + ": coefficient of '" + k + "' must be a number");
        out.emplace_back(k, v.get<double>());
    }
    return out;
}

std::vector<NodeId> id_list(const nlohmann::json& doc, const std::string& key, const std::string& where) {
    if (!doc.contains(key)) return {};
    if (!doc[key].is_array()) throw ParseError(where + ": '" + key + "' must be a list of node ids");
    std::vector<NodeId> out;
    for (const auto& v : doc[key]) {
        if (!v.is_string()) throw ParseError(where + ": '" + key + "' must be a list of node ids");
        out.push_back(v.get<std::string>());
    }
    return out;
}

}  // namespace

PathFunctional parse_intensity(const nlohmann::json& doc, const NodeId& owner) {
    const std::string where = "intensity of '" + owner + "'";
    if (!doc.is_object() || !doc.contains("family") || !doc["family"].is_string())
        throw ParseError(where + ": missing 'family'");
    const std::string family = doc["family"].get<std::string>();
    const std::size_t cap = max_jumps(doc, where);
    const std::vector<NodeId> stop_after = id_list(doc, "stop_after", where);
    PathFunctional f;
    std::function<double(const LocalView&)> core;
    std::size_t offset = 0;

    if (family == "constant") {
        check_keys(doc, {"family", "rate", "max_jumps", "stop_after"}, where);
        const double rate = number(doc, "rate", where);
        if (!(rate >= 0.0) || !std::isfinite(rate)) throw InvalidParams(where + ": rate must be nonnegative");
        f.bound = rate;
        core = [rate](const LocalView&) { return rate; };
    } else if (family == "piecewise_constant") {
        check_keys(doc, {"family", "breaks", "rates", "max_jumps", "stop_after"}, where);
        if (!doc.contains("breaks") || !doc.contains("rates")) throw ParseError(where + ": needs 'breaks' and 'rates'");
        std::vector<double> breaks, rates;
        try {
            breaks = doc["breaks"].get<std::vector<double>>();
            rates = doc["rates"].get<std::vector<double>>();
        } catch (const nlohmann::json::exception&) {
            throw ParseError(where + ": 'breaks' and 'rates' must be number lists");
        }
        if (rates.size() != breaks.size() + 1)
            throw InvalidParams(where + ": needs one more rate than breaks");
        if (!std::is_sorted(breaks.begin(), breaks.end()) ||
            std::adjacent_find(breaks.begin(), breaks.end()) != breaks.end())
            throw InvalidParams(where + ": breaks must be strictly increasing");
        for (double r : rates)
            if (!(r >= 0.0) || !std::isfinite(r)) throw InvalidParams(where + ": rates must be nonnegative");
        f.bound = *std::max_element(rates.begin(), rates.end());
        core = [breaks, rates](const LocalView& v) {
            const auto k = std::upper_bound(breaks.begin(), breaks.end(), v.time()) - breaks.begin();
            return rates[static_cast<std::size_t>(k)];
        };
    } else if (family == "loglinear") {
        check_keys(doc, {"family", "intercept", "baseline", "counts", "ever", "bound", "max_jumps", "stop_after"},
                   where);
        const double intercept = number_or(doc, "intercept", 0.0, where);
        const auto base = coefficients(doc, "baseline", where);
        const auto counts = coefficients(doc, "counts", where);
        const auto ever = coefficients(doc, "ever", where);
        f.bound = number(doc, "bound", where);
        for (const auto* group : {&base, &counts, &ever})
            for (const auto& [id, _] : *group) f.dependencies.push_back(id);
        std::vector<double> coef;
        for (const auto* group : {&base, &counts, &ever})
            for (const auto& [_, c] : *group) coef.push_back(c);
        const std::size_t nb = base.size(), nc = counts.size();
        core = [intercept, coef, nb, nc](const LocalView& v) {
            double eta = intercept;
            for (std::size_t k = 0; k < coef.size(); ++k) {
                const double x = k < nb ? v.value(k) : k < nb + nc ? double(v.count(k)) : double(v.count(k) > 0);
                eta += coef[k] * x;
            }
            return std::exp(eta);
        };
        offset = f.dependencies.size();
    } else {
        throw ParseError(where + ": unknown family '" + family + "'");
    }
    if (!(f.bound >= 0.0) || !std::isfinite(f.bound)) throw InvalidParams(where + ": bound must be finite");

    f.dependencies.insert(f.dependencies.end(), stop_after.begin(), stop_after.end());
    const std::size_t n_stop = stop_after.size();
    f.rate = [core, cap, offset, n_stop](const LocalView& v) {
        if (v.own_count() >= cap) return 0.0;
        for (std::size_t k = 0; k < n_stop; ++k)
            if (v.count(offset + k) > 0) return 0.0;
        return core(v);
    };
    f.descriptor = doc.dump();
    return f;
}

namespace {

BaselineSampler parse_sampler(const nlohmann::json& doc, const NodeId& owner) {
    const std::string where = "baseline of '" + owner + "'";
    if (!doc.is_object() || !doc.contains("family") || !doc["family"].is_string())
        throw ParseError(where + ": missing 'family'");
    const std::string family = doc["family"].get<std::string>();
    BaselineSampler s;
    s.descriptor = doc.dump();
    if (family == "bernoulli") {
        check_keys(doc, {"family", "p", "logit"}, where);
        if (doc.contains("p") == doc.contains("logit")) throw ParseError(where + ": give exactly one of 'p' and 'logit'");
        if (doc.contains("p")) {
            const double p = number(doc, "p", where);
            if (!(p >= 0.0 && p <= 1.0)) throw InvalidParams(where + ": p must lie in [0, 1]");
            s.draw = [p](BaselineContext& c) { return c.rng.bernoulli(p) ? 1.0 : 0.0; };
        } else {
            const auto& l = doc["logit"];
            check_keys(l, {"intercept", "coef"}, where + " logit");
            const double a = number_or(l, "intercept", 0.0, where);
            std::vector<double> coef;
            for (const auto& [id, c] : coefficients(l, "coef", where)) s.parents.push_back(id), coef.push_back(c);
            s.draw = [a, coef](BaselineContext& c) {
                double eta = a;
                for (std::size_t k = 0; k < coef.size(); ++k) eta += coef[k] * c.parents[k];
                return c.rng.bernoulli(1.0 / (1.0 + std::exp(-eta))) ? 1.0 : 0.0;
            };
        }
    } else if (family == "categorical") {
        check_keys(doc, {"family", "probs"}, where);
        std::vector<double> probs;
        try {
            probs = doc.at("probs").get<std::vector<double>>();
        } catch (const nlohmann::json::exception&) {
            throw ParseError(where + ": 'probs' must be a number list");
        }
        double total = 0.0;
        for (double p : probs) {
            if (!(p >= 0.0)) throw InvalidParams(where + ": probabilities must be nonnegative");
            total += p;
        }
        if (probs.empty() || std::abs(total - 1.0) > 1e-9) throw InvalidParams(where + ": probabilities must sum to 1");
        s.draw = [probs](BaselineContext& c) {
            double u = c.rng.uniform(), run = 0.0;
            for (std::size_t k = 0; k + 1 < probs.size(); ++k) {
                run += probs[k];
                if (u <= run) return double(k);
            }
            return double(probs.size() - 1);
        };
    } else if (family == "normal") {
        check_keys(doc, {"family", "mean", "sd", "coef"}, where);
        const double mean = number_or(doc, "mean", 0.0, where), sd = number_or(doc, "sd", 1.0, where);
        if (!(sd >= 0.0)) throw InvalidParams(where + ": sd must be nonnegative");
        std::vector<double> coef;
        for (const auto& [id, c] : coefficients(doc, "coef", where)) s.parents.push_back(id), coef.push_back(c);
        s.draw = [mean, sd, coef](BaselineContext& c) {
            double m = mean;
            for (std::size_t k = 0; k < coef.size(); ++k) m += coef[k] * c.parents[k];
            return m + sd * c.rng.normal();
        };
    } else if (family == "constant") {
        check_keys(doc, {"family", "value"}, where);
        const double v = number(doc, "value", where);
        s.draw = [v](BaselineContext&) { return v; };
    } else {
        throw ParseError(where + ": unknown family '" + family + "'");
    }
    return s;
}

SystemSpec apply_interventions(SystemSpec spec, const nlohmann::json& list) {
    if (!list.is_array()) throw ParseError("'interventions' must be a list");
    for (const auto& item : list) {
        check_keys(item, {"target", "intensity", "multiplier"}, "intervention");
        if (!item.contains("target") || !item["target"].is_string()) throw ParseError("intervention needs a 'target'");
        const NodeId target = item["target"].get<std::string>();
        if (item.contains("intensity") == item.contains("multiplier"))
            throw ParseError("intervention on '" + target + "' needs exactly one of 'intensity' and 'multiplier'");
        spec = item.contains("intensity") ? intervene(spec, target, parse_intensity(item["intensity"], target))
                                          : intervene_multiplier(spec, target, parse_intensity(item["multiplier"], target));
    }
    return spec;
}

}  // namespace

HpvParams parse_hpv_params(const nlohmann::json& doc) {
    const std::string where = "builtin_hpv params";
    if (doc.is_null()) return {};
    if (!doc.is_object()) throw ParseError(where + " must be an object");
    HpvParams p;
    if (doc.contains("scenario")) {
        const auto s = doc["scenario"].get<std::string>();
        if (s == "null")
            p = HpvParams::null_scenario();
        else if (s != "default")
            throw ParseError(where + ": scenario must be 'default' or 'null'");
    }
    std::map<std::string, double*> fields{{"prevalence", &p.prevalence},
                                          {"sensitivity_target", &p.sensitivity_target},
                                          {"sensitivity_reference", &p.sensitivity_reference},
                                          {"false_positive", &p.false_positive},
                                          {"inconclusive_diseased", &p.inconclusive_diseased},
                                          {"inconclusive_healthy", &p.inconclusive_healthy},
                                          {"progression_rate", &p.progression_rate},
                                          {"progression_boost", &p.progression_boost},
                                          {"test_rate_target", &p.test_rate_target},
                                          {"test_rate_reference", &p.test_rate_reference},
                                          {"detection_rate", &p.detection_rate},
                                          {"untested_fraction", &p.untested_fraction},
                                          {"censoring_rate", &p.censoring_rate},
                                          {"horizon", &p.horizon}};
    for (const auto& [k, v] : doc.items()) {
        if (k == "scenario") continue;
        if (k == "n_target" || k == "n_reference") {
            if (!v.is_number_unsigned() || v.get<std::size_t>() == 0)
                throw InvalidParams(where + ": '" + k + "' must be a positive integer");
            (k == "n_target" ? p.n_target : p.n_reference) = v.get<std::size_t>();
            continue;
        }
        const auto it = fields.find(k);
        if (it == fields.end()) throw ParseError(where + ": unknown key '" + k + "'");
        *it->second = number(doc, k, where);
    }
    p.validate();
    return p;
}

SystemSpec parse_spec(const nlohmann::json& doc, const std::string& base_dir) {
    if (!doc.is_object()) throw ParseError("spec must be a JSON object");
    SystemSpec spec;
    if (doc.contains("builtin")) {
        const std::string name = doc["builtin"].get<std::string>();
        if (name == "builtin_4_3") {
            check_keys(doc, {"builtin", "gamma", "horizon", "interventions"}, "builtin_4_3 spec");
            spec = builtin_example_4_3(number(doc, "gamma", "builtin_4_3 spec"),
                                       number_or(doc, "horizon", 1.0, "builtin_4_3 spec"));
        } else if (name == "builtin_hpv") {
            check_keys(doc, {"builtin", "params", "interventions"}, "builtin_hpv spec");
            spec = builtin_hpv_scenario(parse_hpv_params(doc.value("params", nlohmann::json())));
        } else {
            throw ParseError("unknown builtin '" + name + "'");
        }
    } else {
        check_keys(doc, {"name", "horizon", "graph", "graph_file", "baseline", "intensities", "condition", "interventions"},
                   "spec");
        if (doc.contains("graph") == doc.contains("graph_file"))
            throw ParseError("spec needs exactly one of 'graph' and 'graph_file'");
        spec.graph = doc.contains("graph")
                         ? graph_from_json(doc["graph"])
                         : load_graph_file((fs::path(base_dir) / doc["graph_file"].get<std::string>()).string());
        spec.horizon = number(doc, "horizon", "spec");
        spec.name = doc.value("name", std::string("custom"));
        if (doc.contains("baseline")) {
            if (!doc["baseline"].is_object()) throw ParseError("'baseline' must be an object");
            for (const auto& [id, s] : doc["baseline"].items()) spec.baseline[id] = parse_sampler(s, id);
        }
        if (!doc.contains("intensities") || !doc["intensities"].is_object())
            throw ParseError("spec needs an 'intensities' object");
        for (const auto& [id, f] : doc["intensities"].items()) spec.intensities[id] = parse_intensity(f, id);
        if (doc.contains("condition")) {
            const auto& c = doc["condition"];
            if (!c.is_object()) throw ParseError("'condition' must map baseline nodes to values");
            std::vector<std::pair<std::size_t, double>> required;
            for (const auto& [id, v] : c.items()) {
                if (!spec.graph.contains(id) || spec.graph.is_process(id))
                    throw ParseError("condition names '" + id + "', which is not a baseline node");
                if (!v.is_number()) throw ParseError("condition value of '" + id + "' must be a number");
                required.emplace_back(spec.graph.index_of(id), v.get<double>());
            }
            spec.condition = BaselineCondition{[required](std::span<const double> b) {
                                                   for (const auto& [k, v] : required)
                                                       if (b[k] != v) return false;
                                                   return true;
                                               },
                                               c.dump()};
        }
        validate_spec(spec);
    }
    if (doc.contains("interventions")) spec = apply_interventions(std::move(spec), doc["interventions"]);
    return spec;
}

SystemSpec load_spec_file(const std::string& path) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path + ": " + e.what());
    }
    try {
        return parse_spec(doc, fs::path(path).parent_path().string());
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------

void write_weights_csv(const std::string& path, const std::vector<std::string>& ids,
                       const std::vector<WeightTrajectory>& weights, const std::vector<char>& flags,
                       const std::vector<double>& flag_from) {
    std::string out = "subject_id,time,weight,flag\n";
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const auto& w = weights[i];
        for (std::size_t k = 0; k < w.times.size(); ++k) {
            const double t = w.times[k];
            const char* flag = !flags.empty() && flags[i] && t >= flag_from[i] ? "1" : "0";
            // a repeated time lists the left limit first
            if (k > 0 && w.left_limits[k] != w.values[k])
                out += ids[i] + "," + format_double(t) + "," + format_double(w.left_limits[k]) + ",0\n";
            out += ids[i] + "," + format_double(t) + "," + format_double(w.values[k]) + "," + flag + "\n";
        }
    }
    write_text_file(path, out);
}

std::map<std::string, WeightTrajectory> read_weights_csv(const std::string& path) {
    std::map<std::string, WeightTrajectory> out;
    for (const auto& row : read_csv(path, {"subject_id", "time", "weight", "flag"})) {
        const std::string where = path + " (" + row[0] + "," + row[1] + ")";
        const double t = parse_number(row[1], where), v = parse_number(row[2], where);
        if (!(t >= 0.0) || !std::isfinite(v)) throw InputError(where + ": bad time or weight");
        auto& w = out[row[0]];
        if (!w.times.empty() && t < w.times.back()) throw InputError(where + ": times must be nondecreasing");
        if (!w.times.empty() && t == w.times.back()) {
            w.values.back() = v;
            continue;
        }
        if (w.times.empty() && t > 0.0) {
            w.times.push_back(0.0);
            w.values.push_back(1.0);
            w.left_limits.push_back(1.0);
        }
        w.times.push_back(t);
        w.left_limits.push_back(v);
        w.values.push_back(v);
    }
    return out;
}

void write_curve_csv(const std::string& path, const StepCurve& curve) {
    std::string out = "time,value\n";
    for (std::size_t k = 0; k < curve.times.size(); ++k)
        out += format_double(curve.times[k]) + "," + format_double(curve.values[k]) + "\n";
    write_text_file(path, out);
}

void write_band_csv(const std::string& path, const ContrastBand& band) {
    std::string out = "time,value,lower,upper\n";
    for (std::size_t k = 0; k < band.times.size(); ++k)
        out += format_double(band.times[k]) + "," + format_double(band.point[k]) + "," + format_double(band.lower[k]) +
               "," + format_double(band.upper[k]) + "\n";
    write_text_file(path, out);
}

StepCurve read_curve_csv(const std::string& path) {
    std::istringstream in(read_text_file(path));
    std::string header;
    std::getline(in, header);
    if (!header.empty() && header.back() == '\r') header.pop_back();
    const auto cols = split(header);
    if (cols.size() < 2 || cols[0] != "time" || cols[1] != "value")
        throw InputError(path + ": expected header starting with 'time,value'");
    StepCurve c;
    for (const auto& row : read_csv(path, cols)) {
        c.times.push_back(parse_number(row[0], path));
        c.values.push_back(parse_number(row[1], path));
    }
    if (c.times.empty()) throw InputError(path + ": no rows");
    return c;
}

}  // namespace locind
