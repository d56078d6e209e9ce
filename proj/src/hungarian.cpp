#include "embedlab/hungarian.hpp"

#include <limits>

#include "embedlab/errors.hpp"

namespace embedlab {

std::vector<std::size_t> hungarian_max(const MatrixXdRM& weight) {
    const auto n = static_cast<std::size_t>(weight.rows());
    const auto m = static_cast<std::size_t>(weight.cols());
    if (n == 0) return {};
    if (n > m)
        throw CapacityError("assignment needs rows <= cols, got " + std::to_string(n) + " x " +
                            std::to_string(m));

    // shortest augmenting path formulation on cost = -weight, 1-based arrays
    constexpr double kInf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
    std::vector<std::size_t> match(m + 1, 0);  // column -> row (1-based, 0 = free)
    std::vector<std::size_t> way(m + 1, 0);

    auto cost = [&](std::size_t i, std::size_t j) {
        return -weight(static_cast<Eigen::Index>(i - 1), static_cast<Eigen::Index>(j - 1));
    };

    for (std::size_t i = 1; i <= n; ++i) {
        match[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(m + 1, kInf);
        std::vector<char> used(m + 1, 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = match[j0];
            double delta = kInf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= m; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0, j) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= m; ++j) {
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

    std::vector<std::size_t> assignment(n, 0);
    for (std::size_t j = 1; j <= m; ++j)
        if (match[j] != 0) assignment[match[j] - 1] = j - 1;
    return assignment;
}

}  // namespace embedlab
