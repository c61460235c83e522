#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "locind/graph.hpp"

namespace locind {

inline constexpr double kNever = std::numeric_limits<double>::infinity();

/// One subject's baseline values and jump times, indexed like the owning
/// dataset's node list. Baseline slots of process nodes hold NaN.
struct SubjectPath {
    std::string id;
    std::vector<double> baseline;
    std::vector<std::vector<double>> jumps;  // sorted, within (0, horizon]
    double censoring_time = kNever;

    double first_jump(std::size_t node) const {
        return jumps[node].empty() ? kNever : jumps[node].front();
    }
};

struct NodeColumn {
    NodeId id;
    NodeKind kind = NodeKind::Process;
};

class DatasetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct EventDataset {
    std::vector<NodeColumn> nodes;       // sorted by id
    std::optional<NodeId> censoring;     // node whose first jump is C
    double horizon = 1.0;
    std::uint64_t seed = 0;
    std::string spec_hash;
    std::vector<SubjectPath> subjects;

    std::size_t index_of(const NodeId& id) const;
    std::size_t size() const noexcept { return subjects.size(); }
};

/// Empty dataset with the node layout of `graph`.
EventDataset empty_dataset(const LocalIndependenceGraph& graph, double horizon);

/// Copy with every record after each subject's censoring time removed.
EventDataset stop_at_censoring(const EventDataset& data);

/// Copy restricted to the given subjects, in the given order (duplicates allowed).
EventDataset select_subjects(const EventDataset& data, const std::vector<std::size_t>& indices);

/// Strict-past view of a subject path at time t, restricted to a declared
/// dependency list. Jumps at or after t are invisible.
class LocalView {
public:
    LocalView(const SubjectPath& path, std::span<const std::size_t> deps, std::size_t self, double t) noexcept
        : path_(&path), deps_(deps), self_(self), t_(t) {}

    double time() const noexcept { return t_; }

    std::size_t count(std::size_t k) const { return past(deps_[k]).size(); }
    std::span<const double> jumps(std::size_t k) const { return past(deps_[k]); }
    double first_jump(std::size_t k) const {
        const auto p = past(deps_[k]);
        return p.empty() ? kNever : p.front();
    }
    double last_jump(std::size_t k) const {
        const auto p = past(deps_[k]);
        return p.empty() ? kNever : p.back();
    }
    double value(std::size_t k) const { return path_->baseline[deps_[k]]; }

    /// View of dependencies [offset, offset + count) only.
    LocalView subview(std::size_t offset, std::size_t count) const noexcept {
        return LocalView(*path_, deps_.subspan(offset, count), self_, t_);
    }

    std::size_t own_count() const { return past(self_).size(); }
    std::span<const double> own_jumps() const { return past(self_); }

private:
    std::span<const double> past(std::size_t node) const;

    const SubjectPath* path_;
    std::span<const std::size_t> deps_;
    std::size_t self_;
    double t_;
};

}  // namespace locind
