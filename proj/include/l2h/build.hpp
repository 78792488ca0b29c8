#pragma once

// Greedy merging of cluster groups driven by masked-softmax reassignment mass.

#include <algorithm>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "l2h/assignments.hpp"
#include "l2h/error.hpp"
#include "l2h/hierarchy.hpp"
#include "l2h/matrix.hpp"
#include "l2h/softmax.hpp"
#include "l2h/types.hpp"

namespace l2h {

/// How member confidences are reduced into a group score.
enum class Aggregation {
    sum_of_means, ///< sum over the group's clusters of each cluster's mean confidence
    sum,          ///< sum over every member datapoint
    mean,         ///< mean over every member datapoint
};

inline std::string to_string(Aggregation a) {
    switch (a) {
    case Aggregation::sum_of_means: return "sum_of_means";
    case Aggregation::sum: return "sum";
    case Aggregation::mean: return "mean";
    }
    return "?";
}

inline Aggregation parse_aggregation(const std::string& s) {
    if (s == "sum_of_means") return Aggregation::sum_of_means;
    if (s == "sum") return Aggregation::sum;
    if (s == "mean") return Aggregation::mean;
    throw ContractError("unknown aggregation '" + s + "' (expected sum_of_means, sum or mean)");
}

/// Ties are always broken toward the lowest node or cluster id.
struct L2HConfig {
    Aggregation aggregation = Aggregation::sum_of_means;
    /// Worker threads for the reassignment sweep. 1 is bit-for-bit serial.
    unsigned num_threads = 1;
};

struct Group {
    NodeId id = 0;
    std::vector<ClusterId> clusters; ///< sorted ascending
    double score = 0.0;

    bool operator==(const Group&) const = default;
};

/// Disjoint groups ordered by ascending node id.
struct GroupPartition {
    std::vector<Group> groups;

    /// True when the groups' clusters are disjoint and together equal {0..K-1}.
    bool is_exact_cover(std::size_t n_clusters) const {
        std::vector<int> seen(n_clusters, 0);
        for (const auto& g : groups) {
            if (g.clusters.empty()) return false;
            for (auto c : g.clusters) {
                if (c >= n_clusters || seen[c]++) return false;
            }
        }
        return std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; });
    }

    const Group& by_id(NodeId id) const {
        auto it = std::find_if(groups.begin(), groups.end(), [&](const Group& g) { return g.id == id; });
        if (it == groups.end()) throw ContractError("no group with node id " + std::to_string(id));
        return *it;
    }
};

inline double group_score(const Group& group, const AssignmentTable& table, const L2HConfig& config = {}) {
    double total = 0.0;
    switch (config.aggregation) {
    case Aggregation::sum_of_means:
        for (auto c : group.clusters) total += table.cluster_mean_confidence[c];
        return total;
    case Aggregation::sum:
        for (auto c : group.clusters) total += table.cluster_confidence_sum[c];
        return total;
    case Aggregation::mean: {
        std::size_t count = 0;
        for (auto c : group.clusters) {
            total += table.cluster_confidence_sum[c];
            count += table.cluster_size(c);
        }
        return count == 0 ? 0.0 : total / static_cast<double>(count);
    }
    }
    return total;
}

namespace detail {

template <class T>
void accumulate_reassignments(std::span<const T> values, std::size_t k, std::span<const RowIndex> rows,
                              std::span<const char> mask, std::vector<double>& rp) {
    for (auto i : rows) {
        const auto top = masked_softmax_top(values.subspan(i * k, k), mask);
        rp[top.index] += top.probability;
    }
}

} // namespace detail

/// Total masked-softmax probability that the datapoints of `g_star` put on
/// each cluster outside it, counted at the masked argmax only.
///
/// Returns a K-vector; entries for clusters inside `g_star` are 0.
inline std::vector<double> reassignment_mass(const LogitsMatrix& logits, const AssignmentTable& table,
                                             const Group& g_star, unsigned num_threads = 1) {
    const std::size_t k = logits.cols();
    if (g_star.clusters.size() >= k) {
        throw ContractError("group covers all " + std::to_string(k) + " clusters; nothing to reassign to");
    }
    std::vector<char> mask(k, 0);
    for (auto c : g_star.clusters) mask[c] = 1;

    std::vector<double> rp(k, 0.0);
    std::size_t total_rows = 0;
    for (auto c : g_star.clusters) total_rows += table.cluster_size(c);

    logits.visit([&]<class T>(std::span<const T> values) {
        constexpr std::size_t min_rows_per_thread = 2048;
        const unsigned workers = static_cast<unsigned>(
            std::min<std::size_t>(num_threads, total_rows / min_rows_per_thread));
        if (workers <= 1) {
            for (auto c : g_star.clusters) {
                detail::accumulate_reassignments(values, k, table.members(c), mask, rp);
            }
            return;
        }
        std::vector<RowIndex> rows;
        rows.reserve(total_rows);
        for (auto c : g_star.clusters) {
            auto m = table.members(c);
            rows.insert(rows.end(), m.begin(), m.end());
        }
        std::vector<std::vector<double>> partial(workers, std::vector<double>(k, 0.0));
        {
            std::vector<std::jthread> pool;
            const std::size_t chunk = (rows.size() + workers - 1) / workers;
            for (unsigned w = 0; w < workers; ++w) {
                const std::size_t begin = std::min(rows.size(), w * chunk);
                const std::size_t end = std::min(rows.size(), begin + chunk);
                pool.emplace_back([&, w, begin, end] {
                    detail::accumulate_reassignments(
                        values, k, std::span<const RowIndex>(rows).subspan(begin, end - begin), mask,
                        partial[w]);
                });
            }
        }
        // Fixed reduction order keeps the result independent of scheduling.
        for (const auto& p : partial) {
            for (std::size_t c = 0; c < k; ++c) rp[c] += p[c];
        }
    });
    return rp;
}

/// The group other than `g_star` with the highest mean reassignment mass over its clusters.
inline const Group& select_merge_partner(std::span<const double> rp, const GroupPartition& partition,
                                         const Group& g_star) {
    const Group* best = nullptr;
    double best_avg = 0.0;
    for (const auto& g : partition.groups) {
        if (g.id == g_star.id) continue;
        double sum = 0.0;
        for (auto c : g.clusters) sum += rp[c];
        const double avg = sum / static_cast<double>(g.clusters.size());
        if (best == nullptr || avg > best_avg) {
            best = &g;
            best_avg = avg;
        }
    }
    if (best == nullptr) throw ContractError("partition has no group besides the selected one");
    return *best;
}

/// Called after every merge with the step just recorded and the updated partition.
using MergeObserver = std::function<void(const MergeStep&, const GroupPartition&)>;

inline GroupPartition initial_partition(const AssignmentTable& table, const L2HConfig& config) {
    GroupPartition p;
    p.groups.reserve(table.n_clusters);
    for (ClusterId c = 0; c < table.n_clusters; ++c) {
        Group g{c, {c}, 0.0};
        g.score = group_score(g, table, config);
        p.groups.push_back(std::move(g));
    }
    return p;
}

/// Runs the K-1 merge steps over precomputed assignments.
inline Hierarchy build_hierarchy(const LogitsMatrix& logits, const AssignmentTable& table,
                                 const L2HConfig& config = {}, const MergeObserver& observer = {}) {
    const std::size_t k = logits.cols();
    if (k < 2) throw DegenerateError("need at least 2 clusters, got " + std::to_string(k));

    GroupPartition partition = initial_partition(table, config);
    Hierarchy h;
    h.n_clusters = k;
    h.merges.reserve(k - 1);

    for (std::size_t step = 1; step < k; ++step) {
        // Groups are kept in ascending id order, so a strict comparison keeps the lowest id on ties.
        std::size_t lowest = 0;
        for (std::size_t g = 1; g < partition.groups.size(); ++g) {
            if (partition.groups[g].score < partition.groups[lowest].score) lowest = g;
        }
        const Group& g_star = partition.groups[lowest];
        const auto rp = reassignment_mass(logits, table, g_star, config.num_threads);
        const Group& partner = select_merge_partner(rp, partition, g_star);

        MergeStep m;
        m.step = step;
        m.selected_node = g_star.id;
        m.partner_node = partner.id;
        m.new_node = static_cast<NodeId>(k + step - 1);
        m.selected_clusters = g_star.clusters;
        m.partner_clusters = partner.clusters;

        Group merged;
        merged.id = m.new_node;
        std::merge(g_star.clusters.begin(), g_star.clusters.end(), partner.clusters.begin(),
                   partner.clusters.end(), std::back_inserter(merged.clusters));
        merged.score = group_score(merged, table, config);

        std::erase_if(partition.groups,
                      [&](const Group& g) { return g.id == m.selected_node || g.id == m.partner_node; });
        partition.groups.push_back(std::move(merged));
        h.merges.push_back(std::move(m));
        if (observer) observer(h.merges.back(), partition);
    }
    return h;
}

inline Hierarchy build_hierarchy(const LogitsMatrix& logits, const L2HConfig& config = {},
                                 const MergeObserver& observer = {}) {
    if (logits.cols() < 2) {
        throw DegenerateError("need at least 2 clusters, got " + std::to_string(logits.cols()));
    }
    return build_hierarchy(logits, compute_assignments(logits), config, observer);
}

} // namespace l2h
