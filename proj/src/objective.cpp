#include "atd/objective.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "atd/kernels.hpp"
#include "atd/simd.hpp"

namespace atd {

KruskalBases init_bases(std::size_t i, std::size_t j, std::size_t k, std::size_t rank,
                        std::uint64_t seed) {
    if (rank == 0) throw validation_error("init_bases: rank must be >= 1");
    const double scale = 1.0 / std::sqrt(static_cast<double>(rank));
    Rng ra(Rng::derive(seed, 0xA));
    Rng rb(Rng::derive(seed, 0xB));
    Rng rc(Rng::derive(seed, 0xC));
    return {Matrix::gaussian(i, rank, ra, scale), Matrix::gaussian(j, rank, rb, scale),
            Matrix::gaussian(k, rank, rc, scale)};
}

Matrix normalize_rows(const Matrix& x, RowNormPolicy policy, std::size_t* clamped) {
    Matrix out = x;
    for (std::size_t n = 0; n < x.rows(); ++n) {
        double norm = x.row_norm(n);
        if (norm < kRowNormFloor) {
            if (policy == RowNormPolicy::strict)
                throw numeric_error("normalize_rows: row norm below floor");
            if (clamped) ++*clamped;
            norm = kRowNormFloor;
        }
        const double inv = 1.0 / norm;
        double* row = out.row(n);
        for (std::size_t c = 0; c < x.cols(); ++c) row[c] *= inv;
    }
    return out;
}

double cpd_loss(const DenseTensor& t, const DenseTensor& t_aug, const Matrix& x,
                const Matrix& x_aug, const KruskalBases& bases) {
    auto fl = bases.as_list();
    return reconstruction_error_sq(t, &x, fl) + reconstruction_error_sq(t_aug, &x_aug, fl);
}

double reg_loss(const Matrix& x, const Matrix& x_aug, const KruskalBases& bases, double alpha) {
    if (alpha <= 0.0) throw validation_error("reg_loss: alpha must be positive");
    return alpha * (x.frobenius_sq() + x_aug.frobenius_sq() + bases.A.frobenius_sq() +
                    bases.B.frobenius_sq() + bases.C.frobenius_sq());
}

Matrix apply_g_gamma(const Matrix& y, double gamma) {
    const std::size_t n = y.rows();
    if (n < 2) throw validation_error("apply_g_gamma: needs at least two rows");
    const std::size_t cols = y.cols();
    const double off = (gamma + 1.0) / (static_cast<double>(n) * static_cast<double>(n - 1));
    const double diag = 1.0 / static_cast<double>(n);

    tracked_doubles colsum(cols, 0.0);
    for (std::size_t i = 0; i < n; ++i) simd::axpy(1.0, y.row(i), colsum.data(), cols);

    Matrix out(n, cols);
    for (std::size_t i = 0; i < n; ++i) {
        const double* src = y.row(i);
        double* dst = out.row(i);
        for (std::size_t c = 0; c < cols; ++c)
            dst[c] = off * (colsum[c] - src[c]) - diag * src[c];
    }
    return out;
}

double ss_loss(const Matrix& x, const Matrix& x_aug, const SsLossParams& p, RowNormPolicy policy,
               std::size_t* clamped) {
    if (!x.same_shape(x_aug)) throw validation_error("ss_loss: shape mismatch");
    const std::size_t n = x.rows();
    if (n < 2) throw validation_error("ss_loss: needs at least two rows");
    if (p.gamma < 0.0) throw validation_error("ss_loss: gamma must be >= 0");

    const Matrix xn = normalize_rows(x, policy, clamped);
    const Matrix an = normalize_rows(x_aug, policy, clamped);

    const std::size_t cols = x.cols();
    tracked_doubles sx(cols, 0.0), sa(cols, 0.0);
    double diag_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        simd::axpy(1.0, xn.row(i), sx.data(), cols);
        simd::axpy(1.0, an.row(i), sa.data(), cols);
        diag_sum += simd::dot(xn.row(i), an.row(i), cols);
    }
    const double all_pairs = simd::dot(sx.data(), sa.data(), cols);
    const double off = ((p.gamma + 1.0) / (static_cast<double>(n) * static_cast<double>(n - 1))) *
                       (all_pairs - diag_sum);
    return p.beta * (off - diag_sum / static_cast<double>(n));
}

LossTerms total_loss(const DenseTensor& t, const DenseTensor& t_aug, const Matrix& x,
                     const Matrix& x_aug, const KruskalBases& bases, double alpha,
                     const SsLossParams& p, RowNormPolicy policy) {
    LossTerms lt;
    lt.cpd = cpd_loss(t, t_aug, x, x_aug, bases);
    lt.reg = reg_loss(x, x_aug, bases, alpha);
    lt.ss = p.beta == 0.0 ? 0.0 : ss_loss(x, x_aug, p, policy);
    return lt;
}

BoundConstants bound_constants(const std::vector<double>& rates, double lambda) {
    if (rates.empty()) throw validation_error("bound_constants: no rates");
    if (lambda < 1.0) throw validation_error("bound_constants: lambda must be >= 1");
    double sum = 0.0;
    for (double c : rates) {
        if (!(c > 0.0) || !(c < 1.0))
            throw validation_error("bound_constants: rates must lie in (0,1)");
        sum += c;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw validation_error("bound_constants: rates must sum to 1");

    double hi = -1.0, lo = std::numeric_limits<double>::infinity();
    for (double c : rates) {
        const double odds = lambda * c / (1.0 - c);
        hi = std::max(hi, odds);
        lo = std::min(lo, odds);
    }
    return {rates, lambda, 1.0 + hi, 1.0 + lo};
}

double concentration_bound(std::size_t n, double gamma, double delta) {
    if (n < 2) throw validation_error("concentration_bound: N must be >= 2");
    if (gamma < 0.0) throw validation_error("concentration_bound: gamma must be >= 0");
    if (!(delta > 0.0) || !(delta < 1.0))
        throw validation_error("concentration_bound: delta must lie in (0,1)");
    const double g1 = gamma + 1.0;
    const double nn = static_cast<double>(n);
    return std::sqrt((1.0 + g1 * g1 / (nn - 1.0)) * (2.0 / nn) * std::log(2.0 / delta));
}

} // namespace atd
