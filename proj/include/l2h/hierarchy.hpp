#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "l2h/error.hpp"
#include "l2h/types.hpp"

namespace l2h {

/// One binary merge. Leaves are 0..K-1; step s creates node K+s-1.
struct MergeStep {
    std::size_t step = 0;
    NodeId selected_node = 0;
    NodeId partner_node = 0;
    NodeId new_node = 0;
    std::vector<ClusterId> selected_clusters;
    std::vector<ClusterId> partner_clusters;
    /// Linkage distance of the merge; L2H merges carry none.
    std::optional<double> height;

    bool operator==(const MergeStep&) const = default;
};

struct Hierarchy {
    std::size_t n_clusters = 0;
    std::vector<MergeStep> merges;

    NodeId root() const { return static_cast<NodeId>(2 * n_clusters - 2); }
    std::size_t node_count() const { return 2 * n_clusters - 1; }
    bool has_heights() const {
        return !merges.empty() &&
               std::all_of(merges.begin(), merges.end(), [](const auto& m) { return m.height.has_value(); });
    }

    bool operator==(const Hierarchy&) const = default;
};

/// Throws ContractError unless `h` is a complete binary hierarchy over K >= 2 leaves.
inline void validate_hierarchy(const Hierarchy& h) {
    const std::size_t k = h.n_clusters;
    if (k < 2) throw ContractError("hierarchy needs at least 2 leaves, got " + std::to_string(k));
    if (h.merges.size() != k - 1) {
        throw ContractError("hierarchy over " + std::to_string(k) + " leaves must have " +
                            std::to_string(k - 1) + " merges, has " + std::to_string(h.merges.size()));
    }
    std::vector<char> used(2 * k - 1, 0);
    for (std::size_t s = 0; s < h.merges.size(); ++s) {
        const auto& m = h.merges[s];
        const NodeId expected = static_cast<NodeId>(k + s);
        if (m.step != s + 1 || m.new_node != expected) {
            throw ContractError("merge " + std::to_string(s + 1) + " must create node " +
                                std::to_string(expected));
        }
        for (NodeId child : {m.selected_node, m.partner_node}) {
            if (child >= expected) {
                throw ContractError("merge " + std::to_string(s + 1) + " references node " +
                                    std::to_string(child) + " before it exists");
            }
            if (used[child]) {
                throw ContractError("node " + std::to_string(child) + " appears as a child twice");
            }
            used[child] = 1;
        }
    }
}

/// Builds a hierarchy from (selected, partner) node pairs, filling cluster sets.
inline Hierarchy hierarchy_from_pairs(std::size_t n_clusters,
                                      const std::vector<std::pair<NodeId, NodeId>>& pairs,
                                      const std::vector<std::optional<double>>& heights = {}) {
    Hierarchy h;
    h.n_clusters = n_clusters;
    std::vector<std::vector<ClusterId>> members(n_clusters == 0 ? 0 : 2 * n_clusters - 1);
    for (std::size_t c = 0; c < n_clusters; ++c) members[c] = {static_cast<ClusterId>(c)};
    for (std::size_t s = 0; s < pairs.size(); ++s) {
        MergeStep m;
        m.step = s + 1;
        m.selected_node = pairs[s].first;
        m.partner_node = pairs[s].second;
        m.new_node = static_cast<NodeId>(n_clusters + s);
        if (s < heights.size()) m.height = heights[s];
        h.merges.push_back(std::move(m));
    }
    validate_hierarchy(h);
    for (auto& m : h.merges) {
        m.selected_clusters = members[m.selected_node];
        m.partner_clusters = members[m.partner_node];
        auto& merged = members[m.new_node];
        std::merge(m.selected_clusters.begin(), m.selected_clusters.end(), m.partner_clusters.begin(),
                   m.partner_clusters.end(), std::back_inserter(merged));
    }
    return h;
}

} // namespace l2h
