#include "locind/dataset.hpp"

#include <algorithm>

namespace locind {

std::size_t EventDataset::index_of(const NodeId& id) const {
    const auto it = std::lower_bound(nodes.begin(), nodes.end(), id,
                                     [](const NodeColumn& c, const NodeId& v) { return c.id < v; });
    if (it == nodes.end() || it->id != id) throw DatasetError("dataset has no node '" + id + "'");
    return static_cast<std::size_t>(it - nodes.begin());
}

EventDataset empty_dataset(const LocalIndependenceGraph& graph, double horizon) {
    EventDataset d;
    for (const auto& n : graph.nodes()) d.nodes.push_back({n.id, n.kind});
    d.censoring = graph.unique_role(Role::Censoring);
    d.horizon = horizon;
    return d;
}

EventDataset stop_at_censoring(const EventDataset& data) {
    EventDataset out = data;
    for (auto& s : out.subjects) {
        for (auto& j : s.jumps) j.erase(std::upper_bound(j.begin(), j.end(), s.censoring_time), j.end());
    }
    return out;
}

EventDataset select_subjects(const EventDataset& data, const std::vector<std::size_t>& indices) {
    EventDataset out;
    out.nodes = data.nodes;
    out.censoring = data.censoring;
    out.horizon = data.horizon;
    out.seed = data.seed;
    out.spec_hash = data.spec_hash;
    out.subjects.reserve(indices.size());
    for (std::size_t i : indices) out.subjects.push_back(data.subjects.at(i));
    return out;
}

std::span<const double> LocalView::past(std::size_t node) const {
    const auto& j = path_->jumps[node];
    const auto end = std::lower_bound(j.begin(), j.end(), t_);
    return {j.data(), static_cast<std::size_t>(end - j.begin())};
}

}  // namespace locind
