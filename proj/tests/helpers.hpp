#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "atd/matrix.hpp"
#include "atd/rng.hpp"
#include "atd/tensor.hpp"

namespace atd::testing {

inline Matrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols, double scale = 1.0) {
    return Matrix::gaussian(rows, cols, rng, scale);
}

inline DenseTensor random_tensor(Rng& rng, const std::vector<std::size_t>& shape,
                                 double scale = 1.0) {
    DenseTensor t(shape);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = scale * rng.gaussian();
    return t;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
    return worst;
}

inline double rel_diff(const Matrix& a, const Matrix& b) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a.data()[i] - b.data()[i];
        num += d * d;
        den += b.data()[i] * b.data()[i];
    }
    return std::sqrt(num) / std::max(std::sqrt(den), 1e-300);
}

} // namespace atd::testing
