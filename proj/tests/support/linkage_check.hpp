#pragma once

#include <string>
#include <vector>

#include "l2h/agglom.hpp"

namespace l2h::testing {

/// Replays h against distances recomputed from the raw points. Each merge must
/// join a pair whose distance is within rel_tol of the current minimum, and its
/// height must match that distance. Returns an empty string on success.
inline std::string check_linkage_replay(const FeatureMatrix& f, LinkageMethod method, const Hierarchy& h,
                                        double rel_tol = 1e-9) {
    const std::size_t n = f.rows();
    if (h.merges.size() + 1 != n) return "wrong merge count";
    std::vector<std::vector<std::size_t>> items(2 * n - 1);
    std::vector<char> active(2 * n - 1, 0);
    for (std::size_t i = 0; i < n; ++i) {
        items[i] = {i};
        active[i] = 1;
    }
    for (std::size_t s = 0; s < h.merges.size(); ++s) {
        const auto a = h.merges[s].selected_node, b = h.merges[s].partner_node;
        if (a >= n + s || b >= n + s || !active[a] || !active[b] || a == b) {
            return "step " + std::to_string(s) + " merges an inactive node";
        }
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t x = 0; x < n + s; ++x) {
            if (!active[x]) continue;
            for (std::size_t y = x + 1; y < n + s; ++y) {
                if (active[y]) best = std::min(best, detail::direct_distance(f, method, items[x], items[y]));
            }
        }
        const double chosen = detail::direct_distance(f, method, items[a], items[b]);
        const double tol = rel_tol * std::max(1.0, best);
        if (chosen > best + tol) return "step " + std::to_string(s) + " is not a minimal pair";
        if (!h.merges[s].height || std::abs(*h.merges[s].height - detail::report_height(method, chosen)) > tol) {
            return "step " + std::to_string(s) + " height mismatch";
        }
        const std::size_t v = n + s;
        items[v] = items[a];
        items[v].insert(items[v].end(), items[b].begin(), items[b].end());
        active[a] = active[b] = 0;
        active[v] = 1;
    }
    return {};
}

} // namespace l2h::testing
