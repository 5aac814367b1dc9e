#include "atd/kernels.hpp"

#include <cmath>
#include <cstring>

#include "atd/simd.hpp"

namespace atd {

namespace {

std::size_t shared_rank(const std::vector<const Matrix*>& factors, const char* what) {
    if (factors.empty()) throw validation_error(std::string(what) + ": no factors");
    const std::size_t r = factors.front()->cols();
    if (r == 0) throw validation_error(std::string(what) + ": zero rank");
    for (const Matrix* f : factors)
        if (f->cols() != r) throw validation_error(std::string(what) + ": rank mismatch");
    return r;
}

// Odometer over the given extents, least-significant position last.
bool advance(std::vector<std::size_t>& idx, const std::vector<std::size_t>& extents) {
    for (std::size_t pos = idx.size(); pos-- > 0;) {
        if (++idx[pos] < extents[pos]) return true;
        idx[pos] = 0;
    }
    return false;
}

} // namespace

Matrix khatri_rao(const std::vector<const Matrix*>& factors) {
    const std::size_t rank = shared_rank(factors, "khatri_rao");
    std::size_t rows = 1;
    for (const Matrix* f : factors) rows *= f->rows();

    Matrix out(rows, rank);
    std::vector<std::size_t> idx(factors.size(), 0);
    const std::vector<std::size_t>* extents = nullptr;
    std::vector<std::size_t> ext;
    ext.reserve(factors.size());
    for (const Matrix* f : factors) ext.push_back(f->rows());
    extents = &ext;

    std::size_t row = 0;
    do {
        double* dst = out.row(row++);
        for (std::size_t r = 0; r < rank; ++r) {
            double v = 1.0;
            for (std::size_t m = 0; m < factors.size(); ++m) v *= (*factors[m])(idx[m], r);
            dst[r] = v;
        }
    } while (advance(idx, *extents));
    return out;
}

Matrix mttkrp(const DenseTensor& t, const std::vector<const Matrix*>& factors,
              std::size_t target_mode) {
    const std::size_t order = t.order();
    if (target_mode >= order) throw validation_error("mttkrp: mode out of range");
    if (factors.size() != order - 1) throw validation_error("mttkrp: wrong factor count");
    const std::size_t rank = shared_rank(factors, "mttkrp");

    // Map factors onto modes; entry for the target mode stays null.
    std::vector<const Matrix*> by_mode(order, nullptr);
    {
        std::size_t f = 0;
        for (std::size_t m = 0; m < order; ++m)
            if (m != target_mode) by_mode[m] = factors[f++];
    }
    for (std::size_t m = 0; m < order; ++m)
        if (by_mode[m] && by_mode[m]->rows() != t.extent(m))
            throw validation_error("mttkrp: factor rows do not match tensor extent");

    Matrix out(t.extent(target_mode), rank);
    const std::size_t last = order - 1;
    const std::size_t fiber_len = t.extent(last);

    tracked_doubles acc(rank);
    tracked_doubles w(rank);

    // Walk last-mode fibers in row-major order; the source pointer advances
    // contiguously across the whole payload.
    std::vector<std::size_t> idx(order > 1 ? order - 1 : 0, 0);
    std::vector<std::size_t> outer_ext(t.shape().begin(), t.shape().end() - 1);
    const double* src = t.data();

    if (order == 1) {
        // Degenerate: the unfolding is a column vector and there are no
        // factors to contract, which shared_rank already rejected.
        throw validation_error("mttkrp: order-1 tensor has no free modes");
    }

    if (target_mode == last) {
        do {
            for (std::size_t r = 0; r < rank; ++r) w[r] = 1.0;
            for (std::size_t m = 0; m < last; ++m)
                simd::mul_inplace(w.data(), by_mode[m]->row(idx[m]), rank);
            for (std::size_t k = 0; k < fiber_len; ++k)
                simd::axpy(src[k], w.data(), out.row(k), rank);
            src += fiber_len;
        } while (advance(idx, outer_ext));
        return out;
    }

    const Matrix& tail = *by_mode[last];
    do {
        // Contract the fiber against the last-mode factor first.
        std::memset(acc.data(), 0, rank * sizeof(double));
        for (std::size_t k = 0; k < fiber_len; ++k)
            simd::axpy(src[k], tail.row(k), acc.data(), rank);
        src += fiber_len;

        // Fold in the remaining non-target rows, then scatter to the output.
        double* dst = out.row(idx[target_mode]);
        bool have_w = false;
        for (std::size_t m = 0; m < last; ++m) {
            if (m == target_mode) continue;
            if (!have_w) {
                std::memcpy(w.data(), by_mode[m]->row(idx[m]), rank * sizeof(double));
                have_w = true;
            } else {
                simd::mul_inplace(w.data(), by_mode[m]->row(idx[m]), rank);
            }
        }
        if (have_w)
            simd::mul_add(acc.data(), w.data(), dst, rank);
        else
            simd::axpy(1.0, acc.data(), dst, rank);
    } while (advance(idx, outer_ext));
    return out;
}

namespace {

// Shared fiber evaluation so that reconstruction and streaming residuals are
// bitwise consistent: value at (outer index, k) = <w, tail.row(k)> with
// w = product of the leading factor rows.
template <class Emit>
void walk_kruskal(const Matrix* weights, const std::vector<const Matrix*>& factors,
                  const std::vector<std::size_t>& shape, Emit&& emit) {
    const std::size_t rank = factors.front()->cols();
    const std::size_t order = shape.size();
    const std::size_t fiber_len = shape[order - 1];

    std::vector<const Matrix*> by_mode;
    if (weights) by_mode.push_back(weights);
    for (const Matrix* f : factors) by_mode.push_back(f);

    tracked_doubles w(rank);
    std::vector<std::size_t> idx(order - 1, 0);
    std::vector<std::size_t> outer_ext(shape.begin(), shape.end() - 1);
    const Matrix& tail = *by_mode.back();

    std::size_t flat = 0;
    do {
        for (std::size_t r = 0; r < rank; ++r) w[r] = 1.0;
        for (std::size_t m = 0; m + 1 < order; ++m)
            simd::mul_inplace(w.data(), by_mode[m]->row(idx[m]), rank);
        for (std::size_t k = 0; k < fiber_len; ++k)
            emit(flat + k, simd::dot(w.data(), tail.row(k), rank));
        flat += fiber_len;
    } while (advance(idx, outer_ext));
}

std::vector<std::size_t> kruskal_shape(const Matrix* weights,
                                       const std::vector<const Matrix*>& factors) {
    std::vector<std::size_t> shape;
    if (weights) shape.push_back(weights->rows());
    for (const Matrix* f : factors) shape.push_back(f->rows());
    if (shape.size() < 2) throw validation_error("kruskal: need at least two modes");
    return shape;
}

} // namespace

DenseTensor kruskal_reconstruct(const Matrix* weights, const std::vector<const Matrix*>& factors) {
    shared_rank(factors, "kruskal");
    if (weights && weights->cols() != factors.front()->cols())
        throw validation_error("kruskal: rank mismatch");
    auto shape = kruskal_shape(weights, factors);
    DenseTensor out(shape);
    walk_kruskal(weights, factors, shape,
                 [&](std::size_t flat, double v) { out[flat] = v; });
    return out;
}

double reconstruction_error_sq(const DenseTensor& t, const Matrix* weights,
                               const std::vector<const Matrix*>& factors) {
    shared_rank(factors, "reconstruction_error");
    if (weights && weights->cols() != factors.front()->cols())
        throw validation_error("reconstruction_error: rank mismatch");
    auto shape = kruskal_shape(weights, factors);
    if (shape != t.shape())
        throw validation_error("reconstruction_error: model shape does not match tensor");
    double total = 0.0;
    walk_kruskal(weights, factors, shape, [&](std::size_t flat, double v) {
        const double r = t[flat] - v;
        total += r * r;
    });
    return total;
}

Matrix gram(const Matrix& a) {
    const std::size_t r = a.cols();
    Matrix g(r, r);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* row = a.row(i);
        for (std::size_t p = 0; p < r; ++p) simd::axpy(row[p], row, g.row(p), r);
    }
    return g;
}

Matrix hadamard_product(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) throw validation_error("hadamard: shape mismatch");
    Matrix out = a;
    simd::mul_inplace(out.data(), b.data(), out.size());
    return out;
}

GramStack GramStack::from_factors(const std::vector<const Matrix*>& factors, double alpha) {
    GramStack gs;
    gs.alpha = alpha;
    for (const Matrix* f : factors) gs.grams.push_back(gram(*f));
    gs.hadamard = gs.grams.front();
    for (std::size_t i = 1; i < gs.grams.size(); ++i)
        gs.hadamard = hadamard_product(gs.hadamard, gs.grams[i]);
    return gs;
}

Matrix GramStack::system() const {
    Matrix h = hadamard;
    for (std::size_t i = 0; i < h.rows(); ++i) h(i, i) += alpha;
    return h;
}

CholeskyFactor::CholeskyFactor(const Matrix& spd) : l_(spd.rows(), spd.cols()) {
    if (spd.rows() != spd.cols()) throw validation_error("cholesky: matrix not square");
    const std::size_t n = spd.rows();
    for (std::size_t j = 0; j < n; ++j) {
        double d = spd(j, j) - simd::dot(l_.row(j), l_.row(j), j);
        if (!(d > 0.0) || !std::isfinite(d))
            throw numeric_error("cholesky: matrix is singular or not positive definite");
        d = std::sqrt(d);
        l_(j, j) = d;
        for (std::size_t i = j + 1; i < n; ++i)
            l_(i, j) = (spd(i, j) - simd::dot(l_.row(i), l_.row(j), j)) / d;
    }
}

void CholeskyFactor::solve_in_place(double* b) const {
    const std::size_t n = l_.rows();
    for (std::size_t i = 0; i < n; ++i)
        b[i] = (b[i] - simd::dot(l_.row(i), b, i)) / l_(i, i);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t k = i + 1; k < n; ++k) s -= l_(k, i) * b[k];
        b[i] = s / l_(i, i);
    }
}

Matrix ridge_solve(const Matrix& rhs, const Matrix& spd) {
    if (rhs.cols() != spd.rows()) throw validation_error("ridge_solve: shape mismatch");
    CholeskyFactor chol(spd);
    Matrix x = rhs;
    for (std::size_t i = 0; i < x.rows(); ++i) chol.solve_in_place(x.row(i));
    return x;
}

Matrix ridge_solve(const Matrix& rhs, const GramStack& gs) {
    return ridge_solve(rhs, gs.system());
}

} // namespace atd
