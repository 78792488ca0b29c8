#pragma once

// Agglomerative clustering baseline: Euclidean single/complete/average/Ward linkage.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "l2h/error.hpp"
#include "l2h/hierarchy.hpp"
#include "l2h/matrix.hpp"

namespace l2h {

enum class LinkageMethod { single, complete, average, ward };

inline std::string to_string(LinkageMethod m) {
    switch (m) {
    case LinkageMethod::single: return "single";
    case LinkageMethod::complete: return "complete";
    case LinkageMethod::average: return "average";
    case LinkageMethod::ward: return "ward";
    }
    return "?";
}

inline LinkageMethod parse_linkage_method(const std::string& s) {
    if (s == "single") return LinkageMethod::single;
    if (s == "complete") return LinkageMethod::complete;
    if (s == "average") return LinkageMethod::average;
    if (s == "ward") return LinkageMethod::ward;
    throw ContractError("unknown linkage method '" + s + "' (expected single, complete, average or ward)");
}

/// Upper triangle of a symmetric n x n matrix, row by row.
class CondensedDistances {
public:
    explicit CondensedDistances(std::size_t n) : n_{n}, d_(n < 2 ? 0 : n * (n - 1) / 2, 0.0) {}

    std::size_t size() const { return n_; }
    double& at(std::size_t i, std::size_t j) { return d_[index(i, j)]; }
    double at(std::size_t i, std::size_t j) const { return d_[index(i, j)]; }
    const std::vector<double>& values() const { return d_; }

private:
    std::size_t index(std::size_t i, std::size_t j) const {
        if (i > j) std::swap(i, j);
        return n_ * i - i * (i + 1) / 2 + (j - i - 1);
    }

    std::size_t n_;
    std::vector<double> d_;
};

namespace detail {

inline double squared_euclidean(const FeatureMatrix& f, std::size_t i, std::size_t j) {
    double s = 0.0;
    for (std::size_t c = 0; c < f.cols(); ++c) {
        const double diff = f.at(i, c) - f.at(j, c);
        s += diff * diff;
    }
    return s;
}

inline void check_features(const FeatureMatrix& f) {
    if (f.rows() < 2) {
        throw DegenerateError("agglomerative clustering needs at least 2 items, got " + std::to_string(f.rows()));
    }
}

/// Merge order: smaller distance first, then lexicographically smaller (low, high) node ids.
struct PairKey {
    double distance;
    NodeId low;
    NodeId high;

    static PairKey make(double d, NodeId a, NodeId b) { return {d, std::min(a, b), std::max(a, b)}; }
    bool operator<(const PairKey& o) const {
        return std::tie(distance, low, high) < std::tie(o.distance, o.low, o.high);
    }
};

/// Ward works on squared distances internally; reported heights are their square roots.
inline double report_height(LinkageMethod m, double d) { return m == LinkageMethod::ward ? std::sqrt(d) : d; }

/// Linkage distance between two item sets, computed from the raw points.
inline double direct_distance(const FeatureMatrix& f, LinkageMethod method, const std::vector<std::size_t>& xs,
                              const std::vector<std::size_t>& ys) {
    auto euclid = [&](std::size_t i, std::size_t j) { return std::sqrt(squared_euclidean(f, i, j)); };
    switch (method) {
    case LinkageMethod::single: {
        double best = std::numeric_limits<double>::infinity();
        for (auto i : xs)
            for (auto j : ys) best = std::min(best, euclid(i, j));
        return best;
    }
    case LinkageMethod::complete: {
        double best = 0.0;
        for (auto i : xs)
            for (auto j : ys) best = std::max(best, euclid(i, j));
        return best;
    }
    case LinkageMethod::average: {
        double sum = 0.0;
        for (auto i : xs)
            for (auto j : ys) sum += euclid(i, j);
        return sum / static_cast<double>(xs.size() * ys.size());
    }
    case LinkageMethod::ward: {
        const double nx = static_cast<double>(xs.size()), ny = static_cast<double>(ys.size());
        double sq = 0.0;
        for (std::size_t c = 0; c < f.cols(); ++c) {
            double cx = 0.0, cy = 0.0;
            for (auto i : xs) cx += f.at(i, c);
            for (auto j : ys) cy += f.at(j, c);
            const double diff = cx / nx - cy / ny;
            sq += diff * diff;
        }
        return 2.0 * nx * ny / (nx + ny) * sq;
    }
    }
    return 0.0;
}

} // namespace detail

inline CondensedDistances pairwise_distances(const FeatureMatrix& f) {
    CondensedDistances d(f.rows());
    for (std::size_t i = 0; i < f.rows(); ++i) {
        for (std::size_t j = i + 1; j < f.rows(); ++j) d.at(i, j) = std::sqrt(detail::squared_euclidean(f, i, j));
    }
    return d;
}

/// Lance-Williams agglomeration with a cached nearest neighbour per active cluster.
///
/// O(n^2) memory; each step rescans only the rows whose cached neighbour was
/// one of the two merged clusters.
inline Hierarchy linkage(const FeatureMatrix& f, LinkageMethod method) {
    detail::check_features(f);
    const std::size_t n = f.rows();
    CondensedDistances d = pairwise_distances(f);
    if (method == LinkageMethod::ward) {
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) d.at(i, j) = detail::squared_euclidean(f, i, j);
        }
    }

    std::vector<NodeId> node(n);
    std::vector<double> size(n, 1.0);
    std::vector<char> active(n, 1);
    std::vector<std::size_t> nn(n, 0);
    for (std::size_t i = 0; i < n; ++i) node[i] = static_cast<NodeId>(i);

    auto key = [&](std::size_t i, std::size_t j) { return detail::PairKey::make(d.at(i, j), node[i], node[j]); };
    auto rescan = [&](std::size_t i) {
        bool found = false;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i || !active[j]) continue;
            if (!found || key(i, j) < key(i, nn[i])) {
                nn[i] = j;
                found = true;
            }
        }
    };
    for (std::size_t i = 0; i < n; ++i) rescan(i);

    std::vector<std::pair<NodeId, NodeId>> pairs;
    std::vector<std::optional<double>> heights;
    for (std::size_t step = 1; step < n; ++step) {
        std::size_t a = n;
        for (std::size_t i = 0; i < n; ++i) {
            if (active[i] && (a == n || key(i, nn[i]) < key(a, nn[a]))) a = i;
        }
        std::size_t b = nn[a];
        if (node[b] < node[a]) std::swap(a, b);
        const double d_ab = d.at(a, b);
        pairs.emplace_back(node[a], node[b]);
        heights.emplace_back(detail::report_height(method, d_ab));

        const double na = size[a], nb = size[b];
        for (std::size_t k = 0; k < n; ++k) {
            if (!active[k] || k == a || k == b) continue;
            const double dak = d.at(a, k), dbk = d.at(b, k);
            double updated = 0.0;
            switch (method) {
            case LinkageMethod::single: updated = std::min(dak, dbk); break;
            case LinkageMethod::complete: updated = std::max(dak, dbk); break;
            case LinkageMethod::average: updated = (na * dak + nb * dbk) / (na + nb); break;
            case LinkageMethod::ward: {
                const double nk = size[k];
                updated = ((na + nk) * dak + (nb + nk) * dbk - nk * d_ab) / (na + nb + nk);
                break;
            }
            }
            d.at(a, k) = updated;
        }
        active[b] = 0;
        size[a] = na + nb;
        node[a] = static_cast<NodeId>(n + step - 1);

        for (std::size_t k = 0; k < n; ++k) {
            if (!active[k] || k == a) continue;
            if (nn[k] == a || nn[k] == b) {
                rescan(k);
            } else if (key(k, a) < key(k, nn[k])) {
                nn[k] = a;
            }
        }
        if (step + 1 < n) rescan(a);
    }
    return hierarchy_from_pairs(n, pairs, heights);
}

/// Recomputes every inter-cluster distance from the raw points at every
/// step. Validation oracle for linkage(); O(n^4) for average linkage.
inline Hierarchy linkage_bruteforce(const FeatureMatrix& f, LinkageMethod method, std::size_t max_items = 500) {
    detail::check_features(f);
    const std::size_t n = f.rows();
    if (n > max_items) {
        throw ContractError("brute-force linkage capped at " + std::to_string(max_items) + " items, got " +
                            std::to_string(n));
    }
    struct Cluster {
        NodeId id;
        std::vector<std::size_t> items;
    };
    std::vector<Cluster> clusters;
    for (std::size_t i = 0; i < n; ++i) clusters.push_back({static_cast<NodeId>(i), {i}});

    auto distance = [&](const Cluster& x, const Cluster& y) {
        return detail::direct_distance(f, method, x.items, y.items);
    };

    std::vector<std::pair<NodeId, NodeId>> pairs;
    std::vector<std::optional<double>> heights;
    for (std::size_t step = 1; step < n; ++step) {
        std::size_t best_x = 0, best_y = 1;
        detail::PairKey best{std::numeric_limits<double>::infinity(), 0, 0};
        bool found = false;
        for (std::size_t x = 0; x < clusters.size(); ++x) {
            for (std::size_t y = x + 1; y < clusters.size(); ++y) {
                const auto k = detail::PairKey::make(distance(clusters[x], clusters[y]), clusters[x].id,
                                                     clusters[y].id);
                if (!found || k < best) {
                    best = k;
                    best_x = x;
                    best_y = y;
                    found = true;
                }
            }
        }
        pairs.emplace_back(best.low, best.high);
        heights.emplace_back(detail::report_height(method, best.distance));
        Cluster merged{static_cast<NodeId>(n + step - 1), clusters[best_x].items};
        merged.items.insert(merged.items.end(), clusters[best_y].items.begin(), clusters[best_y].items.end());
        clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(best_y));
        clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(best_x));
        clusters.push_back(std::move(merged));
    }
    return hierarchy_from_pairs(n, pairs, heights);
}

} // namespace l2h
