#pragma once

#include <vector>

#include "atd/matrix.hpp"
#include "atd/tensor.hpp"

namespace atd {

// Column-wise Kronecker product of the factors in the given order: column r
// of the result is factors[0].col(r) (x) factors[1].col(r) (x) ...
// All factors must share the column count (rank).
Matrix khatri_rao(const std::vector<const Matrix*>& factors);

// Matricized tensor times Khatri-Rao product along `target_mode` (0-based).
// `factors` carries one matrix per non-target mode, in increasing mode order;
// factor m must have t.extent(m) rows and rank columns. Equals
// unfold(t, target_mode) * khatri_rao(factors) without materializing the
// Khatri-Rao matrix: scratch is two rank-length buffers per call.
Matrix mttkrp(const DenseTensor& t, const std::vector<const Matrix*>& factors,
              std::size_t target_mode);

// Sum of rank-one outer products. With `weights` (one row per sample) the
// result has order factors.size()+1 and the sample mode first; with null
// weights it has order factors.size().
DenseTensor kruskal_reconstruct(const Matrix* weights, const std::vector<const Matrix*>& factors);

// || t - [[weights; factors]] ||_F^2 computed streaming, without building the
// reconstruction. Bitwise-identical to reconstructing with
// kruskal_reconstruct and subtracting, element for element.
double reconstruction_error_sq(const DenseTensor& t, const Matrix* weights,
                               const std::vector<const Matrix*>& factors);

// A^T A, accumulated row by row so the result is exactly symmetric.
Matrix gram(const Matrix& a);

// Per-factor Grams, their Hadamard product, and the ridge weight: the normal
// matrix of every closed-form update is hadamard + alpha*I.
struct GramStack {
    std::vector<Matrix> grams;
    Matrix hadamard;
    double alpha = 0.0;

    static GramStack from_factors(const std::vector<const Matrix*>& factors, double alpha);

    // hadamard + alpha*I, materialized.
    Matrix system() const;
};

// Elementwise product of square matrices of equal shape.
Matrix hadamard_product(const Matrix& a, const Matrix& b);

// In-place lower Cholesky of a symmetric positive-definite matrix.
// Throws numeric_error if a pivot is not strictly positive.
class CholeskyFactor {
public:
    explicit CholeskyFactor(const Matrix& spd);

    // Solve spd * x = b for one right-hand side of length n.
    void solve_in_place(double* b) const;

    std::size_t dim() const { return l_.rows(); }

private:
    Matrix l_;
};

// Rows of the result solve x_i * spd = rhs_i, i.e. rhs * spd^{-1}.
Matrix ridge_solve(const Matrix& rhs, const Matrix& spd);
Matrix ridge_solve(const Matrix& rhs, const GramStack& gs);

} // namespace atd
