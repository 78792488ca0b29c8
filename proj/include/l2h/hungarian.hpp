#pragma once

#include <cstddef>
#include <limits>
#include <vector>

namespace l2h {

/// Minimum-cost assignment on a rows x cols cost matrix (row-major), rows <= cols.
///
/// Returns, for each row, the column assigned to it. Shortest augmenting
/// path formulation of the Hungarian method, O(rows^2 * cols).
inline std::vector<std::size_t> min_cost_assignment(const std::vector<double>& cost, std::size_t rows,
                                                    std::size_t cols) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    // 1-based potentials; column 0 is a virtual sink.
    std::vector<double> u(rows + 1, 0.0), v(cols + 1, 0.0);
    std::vector<std::size_t> owner(cols + 1, 0), way(cols + 1, 0);
    for (std::size_t i = 1; i <= rows; ++i) {
        owner[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(cols + 1, inf);
        std::vector<char> used(cols + 1, 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = owner[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= cols; ++j) {
                if (used[j]) continue;
                const double cur = cost[(i0 - 1) * cols + (j - 1)] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= cols; ++j) {
                if (used[j]) {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (owner[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<std::size_t> row_to_col(rows, 0);
    for (std::size_t j = 1; j <= cols; ++j) {
        if (owner[j] != 0) row_to_col[owner[j] - 1] = j - 1;
    }
    return row_to_col;
}

} // namespace l2h
