#pragma once

#include <span>
#include <vector>

#include "l2h/matrix.hpp"
#include "l2h/softmax.hpp"
#include "l2h/types.hpp"

namespace l2h {

/// Hard assignment and its softmax probability for every datapoint, plus
/// the per-cluster member lists and mean confidences derived from them.
struct AssignmentTable {
    std::size_t n_clusters = 0;
    std::vector<ClusterId> assignment;
    std::vector<double> confidence;
    /// members of cluster c are member_rows[member_offsets[c] .. member_offsets[c+1]), ascending.
    std::vector<std::size_t> member_offsets;
    std::vector<RowIndex> member_rows;
    std::vector<double> cluster_confidence_sum;
    /// 0 for clusters without members.
    std::vector<double> cluster_mean_confidence;

    std::size_t size() const { return assignment.size(); }

    std::span<const RowIndex> members(ClusterId c) const {
        return std::span<const RowIndex>(member_rows)
            .subspan(member_offsets[c], member_offsets[c + 1] - member_offsets[c]);
    }

    std::size_t cluster_size(ClusterId c) const { return member_offsets[c + 1] - member_offsets[c]; }
};

/// Groups precomputed per-row assignments into clusters.
inline AssignmentTable make_assignment_table(std::size_t n_clusters, std::vector<ClusterId> assignment,
                                             std::vector<double> confidence) {
    AssignmentTable t;
    t.n_clusters = n_clusters;
    t.assignment = std::move(assignment);
    t.confidence = std::move(confidence);
    const std::size_t n = t.assignment.size();

    t.member_offsets.assign(n_clusters + 1, 0);
    for (auto c : t.assignment) ++t.member_offsets[c + 1];
    for (std::size_t c = 0; c < n_clusters; ++c) t.member_offsets[c + 1] += t.member_offsets[c];
    t.member_rows.resize(n);
    std::vector<std::size_t> cursor(t.member_offsets.begin(), t.member_offsets.end() - 1);
    for (std::size_t i = 0; i < n; ++i) t.member_rows[cursor[t.assignment[i]]++] = i;

    t.cluster_confidence_sum.assign(n_clusters, 0.0);
    t.cluster_mean_confidence.assign(n_clusters, 0.0);
    for (ClusterId c = 0; c < n_clusters; ++c) {
        double sum = 0.0;
        for (auto i : t.members(c)) sum += t.confidence[i];
        t.cluster_confidence_sum[c] = sum;
        if (const auto n_c = t.cluster_size(c); n_c > 0) {
            t.cluster_mean_confidence[c] = sum / static_cast<double>(n_c);
        }
    }
    return t;
}

/// Row-wise argmax (ties to the lowest id) and max of the softmax.
inline AssignmentTable compute_assignments(const LogitsMatrix& logits) {
    const std::size_t n = logits.rows(), k = logits.cols();
    std::vector<ClusterId> assignment(n);
    std::vector<double> confidence(n);
    logits.visit([&]<class T>(std::span<const T> values) {
        for (std::size_t i = 0; i < n; ++i) {
            const auto top = softmax_top(values.subspan(i * k, k));
            assignment[i] = top.index;
            confidence[i] = top.probability;
        }
    });
    return make_assignment_table(k, std::move(assignment), std::move(confidence));
}

} // namespace l2h
