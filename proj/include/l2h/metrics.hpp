#pragma once

// Flat clustering metrics (NMI, ARI, accuracy, leaf purity) and hierarchy
// metrics (dendrogram purity, least hierarchical distance).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "l2h/assignments.hpp"
#include "l2h/error.hpp"
#include "l2h/hierarchy.hpp"
#include "l2h/hungarian.hpp"
#include "l2h/labels.hpp"
#include "l2h/tree.hpp"

namespace l2h {

/// counts[k * n_classes + c] = datapoints predicted in cluster k with true class c.
struct ContingencyTable {
    std::size_t n_clusters = 0;
    std::size_t n_classes = 0;
    std::vector<std::uint64_t> counts;
    std::vector<std::uint64_t> row_sums;
    std::vector<std::uint64_t> col_sums;
    std::uint64_t total = 0;

    std::uint64_t at(std::size_t k, std::size_t c) const { return counts[k * n_classes + c]; }

    /// Builds a table (and its marginals) from a dense row-major count matrix.
    static ContingencyTable from_counts(std::size_t n_clusters, std::size_t n_classes,
                                        std::vector<std::uint64_t> counts) {
        if (counts.size() != n_clusters * n_classes) throw ContractError("count matrix has wrong size");
        ContingencyTable t;
        t.n_clusters = n_clusters;
        t.n_classes = n_classes;
        t.counts = std::move(counts);
        t.row_sums.assign(n_clusters, 0);
        t.col_sums.assign(n_classes, 0);
        for (std::size_t k = 0; k < n_clusters; ++k) {
            for (std::size_t c = 0; c < n_classes; ++c) {
                t.row_sums[k] += t.at(k, c);
                t.col_sums[c] += t.at(k, c);
                t.total += t.at(k, c);
            }
        }
        return t;
    }
};

/// `n_clusters` of 0 means one more than the largest id present.
inline ContingencyTable contingency(std::span<const ClusterId> assignments, const LabelVector& labels,
                                    std::size_t n_clusters = 0) {
    if (assignments.size() != labels.size()) {
        throw ValidationError("assignment/label length mismatch: " + std::to_string(assignments.size()) +
                              " vs " + std::to_string(labels.size()));
    }
    if (n_clusters == 0) {
        for (auto a : assignments) n_clusters = std::max<std::size_t>(n_clusters, a + 1);
    }
    std::size_t n_classes = labels.n_classes;
    for (auto c : labels.labels) n_classes = std::max<std::size_t>(n_classes, c + 1);
    std::vector<std::uint64_t> counts(n_clusters * n_classes, 0);
    for (std::size_t i = 0; i < assignments.size(); ++i) {
        if (assignments[i] >= n_clusters) throw ContractError("assignment id out of range");
        ++counts[assignments[i] * n_classes + labels.labels[i]];
    }
    return ContingencyTable::from_counts(n_clusters, n_classes, std::move(counts));
}

namespace detail {

/// Sums after sorting so that equal multisets of terms give bit-identical totals.
inline double sorted_sum(std::vector<double> terms) {
    std::sort(terms.begin(), terms.end());
    double s = 0.0;
    for (double t : terms) s += t;
    return s;
}

inline double entropy(std::span<const std::uint64_t> marginal, double n) {
    std::vector<double> terms;
    for (auto a : marginal) {
        if (a == 0) continue;
        terms.push_back(static_cast<double>(a) / n * (std::log(n) - std::log(static_cast<double>(a))));
    }
    return sorted_sum(std::move(terms));
}

inline double choose2(std::uint64_t n) { return static_cast<double>(n) * static_cast<double>(n - (n > 0)) / 2.0; }

} // namespace detail

/// Normalized mutual information, arithmetic-mean normalization.
inline double nmi(const ContingencyTable& ct) {
    if (ct.total == 0) return 1.0;
    const double n = static_cast<double>(ct.total);
    const double hu = detail::entropy(ct.row_sums, n);
    const double hv = detail::entropy(ct.col_sums, n);
    if (hu == 0.0 && hv == 0.0) return 1.0;
    if (hu == 0.0 || hv == 0.0) return 0.0;
    std::vector<double> terms;
    const double log_n = std::log(n);
    for (std::size_t k = 0; k < ct.n_clusters; ++k) {
        for (std::size_t c = 0; c < ct.n_classes; ++c) {
            const auto nij = ct.at(k, c);
            if (nij == 0) continue;
            const double log_nij = std::log(static_cast<double>(nij));
            terms.push_back(static_cast<double>(nij) / n *
                            ((log_n - std::log(static_cast<double>(ct.row_sums[k]))) +
                             (log_nij - std::log(static_cast<double>(ct.col_sums[c])))));
        }
    }
    const double mi = std::max(0.0, detail::sorted_sum(std::move(terms)));
    return std::clamp(2.0 * mi / (hu + hv), 0.0, 1.0);
}

/// Adjusted Rand index over unordered pairs.
inline double ari(const ContingencyTable& ct) {
    double index = 0.0, sum_rows = 0.0, sum_cols = 0.0;
    for (auto v : ct.counts) index += detail::choose2(v);
    for (auto v : ct.row_sums) sum_rows += detail::choose2(v);
    for (auto v : ct.col_sums) sum_cols += detail::choose2(v);
    const double pairs = detail::choose2(ct.total);
    if (pairs == 0.0) return 1.0;
    const double expected = sum_rows * sum_cols / pairs;
    const double max_index = 0.5 * (sum_rows + sum_cols);
    const double denom = max_index - expected;
    if (denom == 0.0) return 1.0;
    return (index - expected) / denom;
}

/// Best one-to-one cluster/class matching, as a fraction of N.
inline double accuracy(const ContingencyTable& ct) {
    if (ct.total == 0) return 0.0;
    const bool transpose = ct.n_clusters > ct.n_classes;
    const std::size_t rows = transpose ? ct.n_classes : ct.n_clusters;
    const std::size_t cols = transpose ? ct.n_clusters : ct.n_classes;
    if (rows == 0) return 0.0;
    std::uint64_t top = 0;
    for (auto v : ct.counts) top = std::max(top, v);
    std::vector<double> cost(rows * cols);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            const auto v = transpose ? ct.at(c, r) : ct.at(r, c);
            cost[r * cols + c] = static_cast<double>(top - v);
        }
    }
    const auto match = min_cost_assignment(cost, rows, cols);
    std::uint64_t matched = 0;
    for (std::size_t r = 0; r < rows; ++r) matched += transpose ? ct.at(match[r], r) : ct.at(r, match[r]);
    return static_cast<double>(matched) / static_cast<double>(ct.total);
}

inline double leaf_purity(const ContingencyTable& ct) {
    if (ct.total == 0) return 0.0;
    std::uint64_t sum = 0;
    for (std::size_t k = 0; k < ct.n_clusters; ++k) {
        std::uint64_t best = 0;
        for (std::size_t c = 0; c < ct.n_classes; ++c) best = std::max(best, ct.at(k, c));
        sum += best;
    }
    return static_cast<double>(sum) / static_cast<double>(ct.total);
}

/// value is empty when there is no same-class pair.
struct DendrogramPurity {
    std::optional<double> value;
    std::uint64_t same_class_pairs = 0;
};

struct LeastHierarchicalDistance {
    std::optional<double> value;
    /// True when no same-class pair falls into different leaves (value is then 0).
    bool empty_pair_set = false;
    std::uint64_t cross_leaf_pairs = 0;
    std::string undefined_reason;
};

namespace detail {

inline void check_tree_inputs(const TreeIndex& t, const AssignmentTable& table, const LabelVector& labels) {
    if (labels.size() != table.size()) {
        throw ValidationError("label count does not match datapoints: " + std::to_string(labels.size()) +
                              " vs " + std::to_string(table.size()));
    }
    if (table.n_clusters != t.n_leaves) {
        throw ValidationError("hierarchy has " + std::to_string(t.n_leaves) + " leaves but assignments use " +
                              std::to_string(table.n_clusters) + " clusters");
    }
}

inline std::uint64_t same_class_pairs(const LabelVector& labels) {
    std::vector<std::uint64_t> per_class(labels.n_classes, 0);
    for (auto c : labels.labels) ++per_class[c];
    std::uint64_t p = 0;
    for (auto n : per_class) p += n * (n - (n > 0)) / 2;
    return p;
}

/// Per-leaf sparse class histograms: (class, count) with count > 0, by class.
inline std::vector<std::vector<std::pair<ClassId, std::uint64_t>>> leaf_histograms(
    const AssignmentTable& table, const LabelVector& labels) {
    std::vector<std::vector<std::pair<ClassId, std::uint64_t>>> out(table.n_clusters);
    std::vector<std::uint64_t> hist(labels.n_classes, 0);
    for (ClusterId leaf = 0; leaf < table.n_clusters; ++leaf) {
        for (auto i : table.members(leaf)) ++hist[labels.labels[i]];
        for (ClassId c = 0; c < labels.n_classes; ++c) {
            if (hist[c] != 0) {
                out[leaf].emplace_back(c, hist[c]);
                hist[c] = 0;
            }
        }
    }
    return out;
}

} // namespace detail

/// Dendrogram purity via per-node class counts: O((2K-1) * C).
///
/// Same-leaf pairs have their leaf as LCA; pairs split across the children of
/// internal node v contribute leftcount * rightcount times the class share under v.
inline DendrogramPurity dendrogram_purity(const TreeIndex& t, const AssignmentTable& table,
                                          const LabelVector& labels) {
    detail::check_tree_inputs(t, table, labels);
    const std::size_t classes = labels.n_classes;
    DendrogramPurity out;
    out.same_class_pairs = detail::same_class_pairs(labels);
    if (out.same_class_pairs == 0) return out;

    const std::size_t k = t.n_leaves;
    std::vector<std::uint64_t> counts(t.node_count() * classes, 0);
    std::vector<std::uint64_t> sizes(t.node_count(), 0);
    for (std::size_t i = 0; i < labels.size(); ++i) ++counts[table.assignment[i] * classes + labels.labels[i]];

    double total = 0.0;
    for (NodeId leaf = 0; leaf < k; ++leaf) {
        const auto* row = &counts[leaf * classes];
        for (std::size_t c = 0; c < classes; ++c) sizes[leaf] += row[c];
        if (sizes[leaf] == 0) continue;
        const double size = static_cast<double>(sizes[leaf]);
        for (std::size_t c = 0; c < classes; ++c) {
            if (row[c] > 1) total += detail::choose2(row[c]) * (static_cast<double>(row[c]) / size);
        }
    }
    for (NodeId v = static_cast<NodeId>(k); v < t.node_count(); ++v) {
        const auto& [l, r] = t.children_of(v);
        auto* row = &counts[v * classes];
        const auto* left = &counts[l * classes];
        const auto* right = &counts[r * classes];
        sizes[v] = sizes[l] + sizes[r];
        for (std::size_t c = 0; c < classes; ++c) row[c] = left[c] + right[c];
        if (sizes[v] == 0) continue;
        const double size = static_cast<double>(sizes[v]);
        for (std::size_t c = 0; c < classes; ++c) {
            if (left[c] != 0 && right[c] != 0) {
                total += static_cast<double>(left[c]) * static_cast<double>(right[c]) *
                         (static_cast<double>(row[c]) / size);
            }
        }
    }
    out.value = total / static_cast<double>(out.same_class_pairs);
    return out;
}

/// Literal O(N^2) pair enumeration; validation oracle for dendrogram_purity.
inline DendrogramPurity dendrogram_purity_bruteforce(const TreeIndex& t, const AssignmentTable& table,
                                                     const LabelVector& labels, std::size_t max_points = 2000) {
    detail::check_tree_inputs(t, table, labels);
    const std::size_t n = labels.size();
    if (n > max_points) {
        throw ContractError("brute-force dendrogram purity capped at " + std::to_string(max_points) +
                            " points, got " + std::to_string(n));
    }
    // pur(lvs(z), C_k), memoized per (node, class) but computed from the raw points.
    std::map<std::pair<NodeId, ClassId>, double> purity_cache;
    auto purity = [&](NodeId z, ClassId cls) {
        auto [it, inserted] = purity_cache.try_emplace({z, cls}, 0.0);
        if (inserted) {
            const auto leaves = leaves_under(t, z);
            std::size_t in_set = 0, of_class = 0;
            for (std::size_t i = 0; i < n; ++i) {
                if (std::binary_search(leaves.begin(), leaves.end(), table.assignment[i])) {
                    ++in_set;
                    if (labels.labels[i] == cls) ++of_class;
                }
            }
            it->second = static_cast<double>(of_class) / static_cast<double>(in_set);
        }
        return it->second;
    };
    DendrogramPurity out;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (labels.labels[i] != labels.labels[j]) continue;
            ++out.same_class_pairs;
            total += purity(lca(t, table.assignment[i], table.assignment[j]), labels.labels[i]);
        }
    }
    if (out.same_class_pairs > 0) out.value = total / static_cast<double>(out.same_class_pairs);
    return out;
}

/// Mean normalized log tree distance over same-class pairs in different leaves.
inline LeastHierarchicalDistance lhd(const TreeIndex& t, const AssignmentTable& table, const LabelVector& labels) {
    detail::check_tree_inputs(t, table, labels);
    const std::size_t k = t.n_leaves;
    LeastHierarchicalDistance out;
    if (k == 2) {
        out.undefined_reason = "K=2: normalizer log2(K)-1 is zero";
        return out;
    }
    const auto hist = detail::leaf_histograms(table, labels);
    double weighted = 0.0;
    const double norm = std::log2(static_cast<double>(k)) - 1.0;
    for (NodeId v = static_cast<NodeId>(k); v < t.node_count(); ++v) {
        const auto& ch = t.children_of(v);
        const auto left = leaves_under(t, ch[0]);
        const auto right = leaves_under(t, ch[1]);
        for (auto a : left) {
            if (hist[a].empty()) continue;
            for (auto b : right) {
                if (hist[b].empty()) continue;
                std::uint64_t w = 0;
                auto ia = hist[a].begin(), ib = hist[b].begin();
                while (ia != hist[a].end() && ib != hist[b].end()) {
                    if (ia->first < ib->first) {
                        ++ia;
                    } else if (ib->first < ia->first) {
                        ++ib;
                    } else {
                        w += ia->second * ib->second;
                        ++ia;
                        ++ib;
                    }
                }
                if (w == 0) continue;
                const std::size_t td = t.depth[a] + t.depth[b] - 2 * t.depth[v];
                out.cross_leaf_pairs += w;
                weighted += static_cast<double>(w) * (std::log2(static_cast<double>(td)) - 1.0) / norm;
            }
        }
    }
    if (out.cross_leaf_pairs == 0) {
        out.empty_pair_set = true;
        out.value = 0.0;
    } else {
        out.value = weighted / static_cast<double>(out.cross_leaf_pairs);
    }
    return out;
}

struct MetricsReport {
    double nmi = 0, ari = 0, accuracy = 0, leaf_purity = 0;
    DendrogramPurity dendrogram_purity;
    LeastHierarchicalDistance lhd;
};

inline MetricsReport evaluate(const Hierarchy& h, const AssignmentTable& table, const LabelVector& labels) {
    const TreeIndex t = to_tree(h);
    detail::check_tree_inputs(t, table, labels);
    const auto ct = contingency(table.assignment, labels, table.n_clusters);
    MetricsReport r;
    r.nmi = nmi(ct);
    r.ari = ari(ct);
    r.accuracy = accuracy(ct);
    r.leaf_purity = leaf_purity(ct);
    r.dendrogram_purity = dendrogram_purity(t, table, labels);
    r.lhd = lhd(t, table, labels);
    return r;
}

} // namespace l2h
