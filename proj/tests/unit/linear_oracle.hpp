#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "ivdtr/common.hpp"

namespace ivdtr::testing {

// Plain Gaussian elimination with partial pivoting on the normal equations.
inline std::vector<double> normal_equation_oracle(const Matrix& x, const std::vector<double>& y, double ridge) {
    const std::size_t p = static_cast<std::size_t>(x.cols()) + 1;
    std::vector<std::vector<double>> a(p, std::vector<double>(p + 1, 0.0));
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        std::vector<double> row(p, 1.0);
        for (Eigen::Index j = 0; j < x.cols(); ++j) row[static_cast<std::size_t>(j) + 1] = x(i, j);
        for (std::size_t r = 0; r < p; ++r) {
            for (std::size_t c = 0; c < p; ++c) a[r][c] += row[r] * row[c];
            a[r][p] += row[r] * y[static_cast<std::size_t>(i)];
        }
    }
    for (std::size_t j = 1; j < p; ++j) a[j][j] += ridge;
    for (std::size_t c = 0; c < p; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < p; ++r) {
            if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
        }
        std::swap(a[c], a[piv]);
        for (std::size_t r = 0; r < p; ++r) {
            if (r == c) continue;
            const double f = a[r][c] / a[c][c];
            for (std::size_t k = c; k <= p; ++k) a[r][k] -= f * a[c][k];
        }
    }
    std::vector<double> beta(p);
    for (std::size_t r = 0; r < p; ++r) beta[r] = a[r][p] / a[r][r];
    return beta;
}

}  // namespace ivdtr::testing
