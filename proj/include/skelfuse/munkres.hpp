#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace skelfuse {

/// Cost that marks a forbidden pairing.
inline constexpr double kForbiddenCost = std::numeric_limits<double>::infinity();

/// Row -> column assignment; -1 means the row is unassigned.
struct Assignment {
    std::vector<int> row_to_col;

    int operator[](std::size_t row) const { return row_to_col[row]; }
    std::size_t size() const { return row_to_col.size(); }
};

/// Optimal one-to-one assignment (Hungarian / Kuhn-Munkres, O(n^3)).
///
/// Rectangular inputs are padded to square with a constant, which adds the
/// same amount to every complete assignment and so leaves the optimum
/// unchanged. Forbidden (infinite) entries are replaced by a constant larger
/// than the sum of any finite assignment, so the solver first maximizes the
/// number of allowed pairs and then minimizes their cost; forbidden pairs
/// never appear in the result. Ties resolve in favour of lower row indices
/// because rows are inserted in increasing order. NaN entries are treated as
/// forbidden.
inline Assignment munkres(const Eigen::MatrixXd& cost) {
    const int rows = static_cast<int>(cost.rows());
    const int cols = static_cast<int>(cost.cols());
    Assignment result{std::vector<int>(static_cast<std::size_t>(rows), -1)};
    if (rows == 0 || cols == 0) return result;

    double max_abs = 0.0;
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            if (std::isfinite(cost(r, c))) max_abs = std::max(max_abs, std::abs(cost(r, c)));

    const std::size_t n = static_cast<std::size_t>(std::max(rows, cols));
    // Larger than any sum of n finite entries, so one forbidden cell always
    // costs more than any combination of allowed ones.
    const double big = (max_abs + 1.0) * (2.0 * static_cast<double>(n) + 1.0);

    auto at = [&](std::size_t r, std::size_t c) -> double {
        if (r >= static_cast<std::size_t>(rows) || c >= static_cast<std::size_t>(cols)) return big;
        const double val = cost(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
        return std::isfinite(val) ? val : big;
    };

    // Shortest augmenting path formulation with row/column potentials,
    // 1-based with a virtual column 0.
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<std::size_t> match(n + 1, 0);  // column -> row
    std::vector<std::size_t> way(n + 1, 0);
    std::vector<double> minv(n + 1);
    std::vector<char> used(n + 1);

    for (std::size_t i = 1; i <= n; ++i) {
        match[0] = i;
        std::size_t j0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = match[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = at(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[match[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (match[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            match[j0] = match[j1];
            j0 = j1;
        } while (j0 != 0);
    }

    for (std::size_t j = 1; j <= n; ++j) {
        const auto r = static_cast<Eigen::Index>(match[j] - 1);
        const auto c = static_cast<Eigen::Index>(j - 1);
        if (r < rows && c < cols && std::isfinite(cost(r, c)))
            result.row_to_col[static_cast<std::size_t>(r)] = static_cast<int>(c);
    }
    return result;
}

/// Sum of the assigned entries, in row order.
inline double assignment_cost(const Eigen::MatrixXd& cost, const Assignment& a) {
    double total = 0.0;
    for (std::size_t r = 0; r < a.size(); ++r)
        if (a[r] >= 0) total += cost(static_cast<Eigen::Index>(r), a[r]);
    return total;
}

}  // namespace skelfuse
