#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include "atd/alloc_stats.hpp"
#include "atd/common.hpp"
#include "atd/rng.hpp"
#include "atd/simd.hpp"

namespace atd {

// Dense row-major matrix of doubles. Factor matrices, coefficient matrices
// and small Gram systems all live here; storage is tracked by alloc_stats.
class Matrix {
public:
    Matrix() = default;

    Matrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    static Matrix gaussian(std::size_t rows, std::size_t cols, Rng& rng, double scale = 1.0) {
        Matrix m(rows, cols);
        for (auto& v : m.data_) v = scale * rng.gaussian();
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    double* row(std::size_t r) { return data_.data() + r * cols_; }
    const double* row(std::size_t r) const { return data_.data() + r * cols_; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    double frobenius_sq() const { return simd::sum_squares(data_.data(), data_.size()); }

    double row_norm(std::size_t r) const {
        return std::sqrt(simd::sum_squares(row(r), cols_));
    }

    bool all_finite() const {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    void require_finite(const char* what) const {
        if (!all_finite())
            throw validation_error(std::string(what) + ": non-finite entry");
    }

    bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

    // this += a * other
    void add_scaled(const Matrix& o, double a) {
        if (!same_shape(o)) throw validation_error("add_scaled: shape mismatch");
        simd::axpy(a, o.data(), data(), size());
    }

    void scale(double a) {
        for (auto& v : data_) v *= a;
    }

    friend bool operator==(const Matrix& a, const Matrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    tracked_doubles data_;
};

// Convex blend (1-eta)*a + eta*b, elementwise.
inline Matrix blend(const Matrix& a, const Matrix& b, double eta) {
    if (!a.same_shape(b)) throw validation_error("blend: shape mismatch");
    Matrix out(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.size(); ++i)
        out.data()[i] = (1.0 - eta) * a.data()[i] + eta * b.data()[i];
    return out;
}

} // namespace atd
