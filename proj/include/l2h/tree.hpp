#pragma once

#include <algorithm>
#include <array>
#include <optional>
#include <string>
#include <vector>

#include "l2h/assignments.hpp"
#include "l2h/error.hpp"
#include "l2h/hierarchy.hpp"
#include "l2h/labels.hpp"
#include "l2h/types.hpp"

namespace l2h {

/// Rooted binary tree over 2K-1 nodes: leaves 0..K-1, root 2K-2.
struct TreeIndex {
    std::size_t n_leaves = 0;
    std::vector<NodeId> parent; ///< no_node for the root
    std::vector<std::array<NodeId, 2>> children; ///< indexed by node - n_leaves
    std::vector<std::size_t> depth;

    std::size_t node_count() const { return parent.size(); }
    NodeId root() const { return static_cast<NodeId>(node_count() - 1); }
    bool is_leaf(NodeId v) const { return v < n_leaves; }
    const std::array<NodeId, 2>& children_of(NodeId v) const { return children[v - n_leaves]; }

    void check_node(NodeId v) const {
        if (v >= node_count()) {
            throw ContractError("invalid node id " + std::to_string(v) + " (tree has " +
                                std::to_string(node_count()) + " nodes)");
        }
    }
};

inline TreeIndex to_tree(const Hierarchy& h) {
    validate_hierarchy(h);
    const std::size_t k = h.n_clusters;
    TreeIndex t;
    t.n_leaves = k;
    t.parent.assign(2 * k - 1, no_node);
    t.children.resize(k - 1);
    t.depth.assign(2 * k - 1, 0);
    for (const auto& m : h.merges) {
        t.parent[m.selected_node] = m.new_node;
        t.parent[m.partner_node] = m.new_node;
        t.children[m.new_node - k] = {m.selected_node, m.partner_node};
    }
    // Children always have smaller ids than their parent.
    for (std::size_t v = 2 * k - 1; v-- > 0;) {
        if (t.parent[v] != no_node) t.depth[v] = t.depth[t.parent[v]] + 1;
    }
    return t;
}

inline NodeId lca(const TreeIndex& t, NodeId a, NodeId b) {
    t.check_node(a);
    t.check_node(b);
    while (t.depth[a] > t.depth[b]) a = t.parent[a];
    while (t.depth[b] > t.depth[a]) b = t.parent[b];
    while (a != b) {
        a = t.parent[a];
        b = t.parent[b];
    }
    return a;
}

/// Leaf ids of the subtree rooted at `node`, ascending.
inline std::vector<ClusterId> leaves_under(const TreeIndex& t, NodeId node) {
    t.check_node(node);
    std::vector<ClusterId> out;
    std::vector<NodeId> stack{node};
    while (!stack.empty()) {
        const NodeId v = stack.back();
        stack.pop_back();
        if (t.is_leaf(v)) {
            out.push_back(v);
        } else {
            const auto& ch = t.children_of(v);
            stack.push_back(ch[0]);
            stack.push_back(ch[1]);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

/// Leaves left to right, visiting the selected child before the partner.
inline std::vector<ClusterId> leaf_order(const TreeIndex& t, NodeId node) {
    t.check_node(node);
    std::vector<ClusterId> out;
    std::vector<NodeId> stack{node};
    while (!stack.empty()) {
        const NodeId v = stack.back();
        stack.pop_back();
        if (t.is_leaf(v)) {
            out.push_back(v);
        } else {
            const auto& ch = t.children_of(v);
            stack.push_back(ch[1]);
            stack.push_back(ch[0]);
        }
    }
    return out;
}

inline std::vector<ClusterId> leaf_order(const TreeIndex& t) { return leaf_order(t, t.root()); }

/// Number of edges on the path between two distinct leaves.
inline std::size_t tree_distance(const TreeIndex& t, ClusterId leaf_a, ClusterId leaf_b) {
    if (leaf_a >= t.n_leaves || leaf_b >= t.n_leaves) throw ContractError("tree_distance expects leaf ids");
    if (leaf_a == leaf_b) throw ContractError("tree_distance of a leaf to itself is undefined");
    const NodeId z = lca(t, leaf_a, leaf_b);
    return t.depth[leaf_a] + t.depth[leaf_b] - 2 * t.depth[z];
}

/// Extracts the subtree rooted at internal node `node` as a standalone
/// hierarchy; leaf i of the result is original leaf `original_leaves[i]`.
inline Hierarchy subtree(const Hierarchy& h, NodeId node, std::vector<ClusterId>* original_leaves = nullptr) {
    const TreeIndex t = to_tree(h);
    t.check_node(node);
    if (t.is_leaf(node)) throw ContractError("subtree root " + std::to_string(node) + " is a leaf");
    const auto leaves = leaves_under(t, node);
    const std::size_t m = leaves.size();
    std::vector<NodeId> remap(t.node_count(), no_node);
    for (std::size_t i = 0; i < m; ++i) remap[leaves[i]] = static_cast<NodeId>(i);

    std::vector<std::pair<NodeId, NodeId>> pairs;
    std::vector<std::optional<double>> heights;
    for (const auto& step : h.merges) {
        if (step.new_node > node) break;
        if (remap[step.selected_node] == no_node) continue;
        remap[step.new_node] = static_cast<NodeId>(m + pairs.size());
        pairs.emplace_back(remap[step.selected_node], remap[step.partner_node]);
        heights.push_back(step.height);
    }
    if (original_leaves) original_leaves->assign(leaves.begin(), leaves.end());
    return hierarchy_from_pairs(m, pairs, heights);
}

struct LeafAnnotation {
    ClusterId leaf = 0;
    std::optional<ClassId> majority_label;
    /// Display name of the majority label; empty for empty leaves.
    std::string label_name;
    double purity_pct = 0.0;
    std::size_t size = 0;

    bool operator==(const LeafAnnotation&) const = default;
};

/// Majority true label (ties to the lowest class id) and its share, per leaf.
inline std::vector<LeafAnnotation> annotate_leaves(const TreeIndex& t, const AssignmentTable& table,
                                                   const LabelVector& labels) {
    if (labels.size() != table.size()) {
        throw ValidationError("label count does not match datapoints: " + std::to_string(labels.size()) +
                              " vs " + std::to_string(table.size()));
    }
    std::vector<LeafAnnotation> out(t.n_leaves);
    std::vector<std::size_t> hist(labels.n_classes);
    for (ClusterId leaf = 0; leaf < t.n_leaves; ++leaf) {
        auto& a = out[leaf];
        a.leaf = leaf;
        if (leaf >= table.n_clusters) continue;
        const auto members = table.members(leaf);
        a.size = members.size();
        if (members.empty()) continue;
        std::fill(hist.begin(), hist.end(), 0);
        for (auto i : members) ++hist[labels.labels[i]];
        const auto best = std::max_element(hist.begin(), hist.end()) - hist.begin();
        a.majority_label = static_cast<ClassId>(best);
        a.label_name = labels.name(static_cast<ClassId>(best));
        a.purity_pct = 100.0 * static_cast<double>(hist[best]) / static_cast<double>(a.size);
    }
    return out;
}

} // namespace l2h
