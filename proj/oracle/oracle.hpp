#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "atd/matrix.hpp"
#include "atd/tensor.hpp"

// Brute-force reference implementations for tests and expected-value
// generation. Everything here favors the obvious formulation over speed and
// shares no code with the kernels it cross-checks. Size caps keep test
// runtimes sub-second: row counts <= 64, tensor extents <= 16.

namespace atd::oracle {

inline constexpr std::size_t kMaxRows = 64;
inline constexpr std::size_t kMaxExtent = 16;

// Materialized N x N contrast matrix: diagonal -1/N, off-diagonal
// (gamma+1)/(N(N-1)).
Matrix dense_g_matrix(std::size_t n, double gamma);

// Plain dense product a * b.
Matrix matmul(const Matrix& a, const Matrix& b);

struct FdSpec {
    double step = 1e-5;
};

// Central finite differences of a scalar function of a matrix, entry by entry.
Matrix fd_gradient(const std::function<double(const Matrix&)>& objective, const Matrix& point,
                   const FdSpec& spec = {});

// Gaussian elimination with partial pivoting; rows of the result solve
// x_i * a = rhs_i.
Matrix naive_ls(const Matrix& rhs, const Matrix& a);

// Khatri-Rao product by its definition, one scalar product per entry.
Matrix naive_khatri_rao(const std::vector<const Matrix*>& factors);

// unfold(t, mode) * KR(factors), both sides materialized via direct index
// arithmetic (no shared unfolding code).
Matrix naive_mttkrp(const DenseTensor& t, const std::vector<const Matrix*>& factors,
                    std::size_t target_mode);

// Elementwise sum of squares by an explicit loop.
double naive_frobenius_sq(const DenseTensor& t);

// The row-wise stationary point u = v1 - (beta/||u||) v2, found by scalar
// iteration on the norm with a consistency check of 1e-12.
std::vector<double> fixed_point_u(const std::vector<double>& v1, const std::vector<double>& v2,
                                  double beta);

// beta * Tr(Xn^T G Zn) with Xn, Zn the row-normalized inputs and G dense.
double dense_ss_loss(const Matrix& x, const Matrix& x_aug, double gamma, double beta);

} // namespace atd::oracle
