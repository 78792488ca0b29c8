#include <gtest/gtest.h>

#include <random>

#include "l2h/assignments.hpp"
#include "l2h/labels.hpp"
#include "l2h/tree.hpp"
#include "support/test_util.hpp"

using namespace l2h;
using l2h::testing::balanced4;

namespace {

// 0+2 -> 3, then 1+3 -> 4.
Hierarchy three_cluster() { return hierarchy_from_pairs(3, {{0, 2}, {1, 3}}); }

} // namespace

TEST(ToTree, TwoLeaves) {
    const auto t = to_tree(hierarchy_from_pairs(2, {{0, 1}}));
    EXPECT_EQ(t.parent[0], 2u);
    EXPECT_EQ(t.parent[1], 2u);
    EXPECT_EQ(t.parent[2], no_node);
    EXPECT_EQ(t.depth[2], 0u);
    EXPECT_EQ(t.depth[0], 1u);
    EXPECT_EQ(t.depth[1], 1u);
    EXPECT_EQ(t.root(), 2u);
}

TEST(ToTree, ThreeClusterDepths) {
    const auto t = to_tree(three_cluster());
    EXPECT_EQ(t.depth[1], 1u);
    EXPECT_EQ(t.depth[0], 2u);
    EXPECT_EQ(t.depth[2], 2u);
    EXPECT_EQ(t.node_count(), 5u);
}

TEST(ToTree, RejectsNodeUsedTwice) {
    Hierarchy h = hierarchy_from_pairs(3, {{0, 1}, {2, 3}});
    h.merges[1].selected_node = 0;
    EXPECT_THROW(to_tree(h), ContractError);
}

TEST(ToTree, RejectsWrongMergeCountAndForwardReferences) {
    Hierarchy h = hierarchy_from_pairs(3, {{0, 1}, {2, 3}});
    h.merges.pop_back();
    EXPECT_THROW(to_tree(h), ContractError);
    Hierarchy fwd = hierarchy_from_pairs(3, {{0, 1}, {2, 3}});
    fwd.merges[0].partner_node = 4;
    EXPECT_THROW(to_tree(fwd), ContractError);
}

TEST(Lca, Cases) {
    const auto t = to_tree(balanced4());
    EXPECT_EQ(lca(t, 0, 1), 4u);
    EXPECT_EQ(lca(t, 0, 2), 6u);
    EXPECT_EQ(lca(t, 3, 3), 3u);
    EXPECT_EQ(lca(to_tree(three_cluster()), 0, 1), 4u);
    EXPECT_THROW(lca(t, 0, 7), ContractError);
}

TEST(LeavesUnder, Cases) {
    const auto t = to_tree(three_cluster());
    EXPECT_EQ(leaves_under(t, 4), (std::vector<ClusterId>{0, 1, 2}));
    EXPECT_EQ(leaves_under(t, 2), (std::vector<ClusterId>{2}));
    EXPECT_EQ(leaves_under(t, 3), (std::vector<ClusterId>{0, 2}));
    EXPECT_THROW(leaves_under(t, 5), ContractError);
}

TEST(LeafOrder, SelectedChildFirst) {
    EXPECT_EQ(leaf_order(to_tree(three_cluster())), (std::vector<ClusterId>{1, 0, 2}));
    EXPECT_EQ(leaf_order(to_tree(balanced4())), (std::vector<ClusterId>{0, 1, 2, 3}));
}

TEST(TreeDistance, Cases) {
    const auto b = to_tree(balanced4());
    EXPECT_EQ(tree_distance(b, 0, 1), 2u);
    EXPECT_EQ(tree_distance(b, 0, 2), 4u);
    EXPECT_EQ(tree_distance(to_tree(three_cluster()), 0, 1), 3u);
    EXPECT_THROW(tree_distance(b, 1, 1), ContractError);
    EXPECT_THROW(tree_distance(b, 1, 5), ContractError);
}

TEST(TreeProperties, RandomTrees) {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t k = 2 + rng() % 60;
        const auto t = to_tree(l2h::testing::random_hierarchy(rng, k));
        ASSERT_EQ(t.node_count(), 2 * k - 1);
        EXPECT_EQ(leaves_under(t, t.root()).size(), k);
        auto order = leaf_order(t);
        std::sort(order.begin(), order.end());
        for (std::size_t i = 0; i < k; ++i) EXPECT_EQ(order[i], i);
        // Pairs separated at each internal node: sum of left*right = K(K-1)/2.
        std::size_t pairs = 0;
        for (NodeId v = static_cast<NodeId>(k); v < t.node_count(); ++v) {
            const auto& ch = t.children_of(v);
            pairs += leaves_under(t, ch[0]).size() * leaves_under(t, ch[1]).size();
            EXPECT_EQ(t.depth[ch[0]], t.depth[v] + 1);
        }
        EXPECT_EQ(pairs, k * (k - 1) / 2);
        const ClusterId a = static_cast<ClusterId>(rng() % k), b = static_cast<ClusterId>(rng() % k);
        if (a != b) {
            EXPECT_EQ(tree_distance(t, a, b), tree_distance(t, b, a));
        }
    }
}

TEST(Subtree, RemapsLeavesAndKeepsShape) {
    // ((0,1),(2,3)) plus leaf 4 joined at the root.
    const auto h = hierarchy_from_pairs(5, {{2, 3}, {0, 1}, {5, 6}, {4, 7}});
    std::vector<ClusterId> original;
    const auto s = subtree(h, 5, &original);
    EXPECT_EQ(s.n_clusters, 2u);
    EXPECT_EQ(original, (std::vector<ClusterId>{2, 3}));
    const auto whole = subtree(h, 7, &original);
    EXPECT_EQ(whole.n_clusters, 4u);
    EXPECT_EQ(original, (std::vector<ClusterId>{0, 1, 2, 3}));
    EXPECT_NO_THROW(validate_hierarchy(whole));
    const auto t = to_tree(whole);
    EXPECT_EQ(tree_distance(t, 0, 1), 2u);
    EXPECT_EQ(tree_distance(t, 0, 2), 4u);
    EXPECT_THROW(subtree(h, 3), ContractError);
    EXPECT_THROW(subtree(h, 42), ContractError);
}

TEST(AnnotateLeaves, MajorityPurityAndEmpty) {
    // Leaf 0: [a,a,b]; leaf 1: [a,b]; leaf 2: empty.
    const auto table = make_assignment_table(3, {0, 0, 0, 1, 1}, {1, 1, 1, 1, 1});
    const std::vector<std::string> names{"a", "a", "b", "b", "a"};
    const auto labels = LabelVector::from_strings(names);
    const auto ann = annotate_leaves(to_tree(three_cluster()), table, labels);
    ASSERT_EQ(ann.size(), 3u);
    EXPECT_EQ(ann[0].label_name, "a");
    EXPECT_NEAR(ann[0].purity_pct, 66.7, 0.1);
    EXPECT_EQ(ann[0].size, 3u);
    EXPECT_EQ(ann[1].majority_label, ClassId{0});
    EXPECT_EQ(ann[1].purity_pct, 50.0);
    EXPECT_FALSE(ann[2].majority_label.has_value());
    EXPECT_EQ(ann[2].purity_pct, 0.0);
    EXPECT_EQ(ann[2].size, 0u);
}
