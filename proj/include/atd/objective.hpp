#pragma once

#include <cstddef>
#include <vector>

#include "atd/bases.hpp"
#include "atd/matrix.hpp"
#include "atd/tensor.hpp"

namespace atd {

// Rows with Euclidean norm below this are degenerate for cosine scaling.
// The loss entry points reject them; the solver instead caps the reciprocal
// at 1/kRowNormFloor and counts the event, so a sweep never aborts.
inline constexpr double kRowNormFloor = 1e-12;

enum class RowNormPolicy { strict, clamp };

// Rows scaled to unit norm. Under `clamp`, *clamped (if non-null) counts the
// rows whose norm fell below the floor.
Matrix normalize_rows(const Matrix& x, RowNormPolicy policy, std::size_t* clamped = nullptr);

struct SsLossParams {
    double gamma = 0.0; // >= 0
    double beta = 1.0;  // > 0
};

// Both reconstruction terms: ||t - [[x;A,B,C]]||_F^2 + ||t_aug - [[x_aug;A,B,C]]||_F^2.
double cpd_loss(const DenseTensor& t, const DenseTensor& t_aug, const Matrix& x,
                const Matrix& x_aug, const KruskalBases& bases);

// alpha * (||x||^2 + ||x_aug||^2 + ||A||^2 + ||B||^2 + ||C||^2).
double reg_loss(const Matrix& x, const Matrix& x_aug, const KruskalBases& bases, double alpha);

// Product with the N x N contrast matrix (diagonal -1/N, off-diagonal
// (gamma+1)/(N(N-1))) computed row-streaming in O(N*cols) without forming it.
Matrix apply_g_gamma(const Matrix& y, double gamma);

// beta * [ (gamma+1)/(N(N-1)) * sum_{n != s} cos(x_n, x_aug_s)
//          - (1/N) * sum_n cos(x_n, x_aug_n) ].
// Policy `strict` (the default here) rejects zero-norm rows.
double ss_loss(const Matrix& x, const Matrix& x_aug, const SsLossParams& p,
               RowNormPolicy policy = RowNormPolicy::strict, std::size_t* clamped = nullptr);

struct LossTerms {
    double cpd = 0.0;
    double reg = 0.0;
    double ss = 0.0;
    double total() const { return cpd + reg + ss; }
};

LossTerms total_loss(const DenseTensor& t, const DenseTensor& t_aug, const Matrix& x,
                     const Matrix& x_aug, const KruskalBases& bases, double alpha,
                     const SsLossParams& p, RowNormPolicy policy = RowNormPolicy::strict);

// Diagnostic constants of the label-rate sandwich bound; lambda never enters
// any runtime path besides this.
struct BoundConstants {
    std::vector<double> rates;
    double lambda = 1.0;
    double c1 = 0.0; // 1 + max_m lambda*c_m/(1-c_m)
    double c2 = 0.0; // 1 + min_m lambda*c_m/(1-c_m)
};

BoundConstants bound_constants(const std::vector<double>& rates, double lambda);

// sqrt((1 + (gamma+1)^2/(N-1)) * (2/N) * ln(2/delta)); the high-probability
// deviation radius of the empirical alignment estimator.
double concentration_bound(std::size_t n, double gamma, double delta);

} // namespace atd
