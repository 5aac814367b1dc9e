#include "oracle.hpp"

#include <cmath>
#include <cstdlib>

#include "atd/common.hpp"

namespace atd::oracle {

namespace {

void cap_rows(std::size_t n, const char* what) {
    if (n > kMaxRows) throw validation_error(std::string(what) + ": oracle size cap exceeded");
}

void cap_extents(const DenseTensor& t, const char* what) {
    for (std::size_t e : t.shape())
        if (e > kMaxExtent)
            throw validation_error(std::string(what) + ": oracle extent cap exceeded");
}

} // namespace

Matrix dense_g_matrix(std::size_t n, double gamma) {
    if (n < 2) throw validation_error("dense_g_matrix: N must be >= 2");
    cap_rows(n, "dense_g_matrix");
    Matrix g(n, n);
    const double off = (gamma + 1.0) / (static_cast<double>(n) * static_cast<double>(n - 1));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            g(i, j) = i == j ? -1.0 / static_cast<double>(n) : off;
    return g;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw validation_error("oracle matmul: shape mismatch");
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
            out(i, j) = s;
        }
    return out;
}

Matrix fd_gradient(const std::function<double(const Matrix&)>& objective, const Matrix& point,
                   const FdSpec& spec) {
    if (!(spec.step > 0.0)) throw validation_error("fd_gradient: step must be > 0");
    Matrix grad(point.rows(), point.cols());
    Matrix probe = point;
    for (std::size_t i = 0; i < point.size(); ++i) {
        const double original = probe.data()[i];
        probe.data()[i] = original + spec.step;
        const double up = objective(probe);
        probe.data()[i] = original - spec.step;
        const double down = objective(probe);
        probe.data()[i] = original;
        if (!std::isfinite(up) || !std::isfinite(down))
            throw numeric_error("fd_gradient: objective not finite near the point");
        grad.data()[i] = (up - down) / (2.0 * spec.step);
    }
    return grad;
}

Matrix naive_ls(const Matrix& rhs, const Matrix& a) {
    if (a.rows() != a.cols()) throw validation_error("naive_ls: system not square");
    if (rhs.cols() != a.rows()) throw validation_error("naive_ls: shape mismatch");
    const std::size_t n = a.rows();
    cap_rows(n, "naive_ls");

    // Solve a^T y = rhs_row^T for each row; a is symmetric in every caller but
    // eliminate generally anyway.
    Matrix out(rhs.rows(), rhs.cols());
    for (std::size_t r = 0; r < rhs.rows(); ++r) {
        // Augmented system copy.
        std::vector<std::vector<double>> m(n, std::vector<double>(n + 1));
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) m[i][j] = a(j, i);
            m[i][n] = rhs(r, i);
        }
        for (std::size_t col = 0; col < n; ++col) {
            std::size_t pivot = col;
            for (std::size_t i = col + 1; i < n; ++i)
                if (std::abs(m[i][col]) > std::abs(m[pivot][col])) pivot = i;
            if (std::abs(m[pivot][col]) < 1e-300)
                throw numeric_error("naive_ls: singular system");
            std::swap(m[col], m[pivot]);
            for (std::size_t i = col + 1; i < n; ++i) {
                const double f = m[i][col] / m[col][col];
                for (std::size_t j = col; j <= n; ++j) m[i][j] -= f * m[col][j];
            }
        }
        for (std::size_t i = n; i-- > 0;) {
            double s = m[i][n];
            for (std::size_t j = i + 1; j < n; ++j) s -= m[i][j] * out(r, j);
            out(r, i) = s / m[i][i];
        }
    }
    return out;
}

Matrix naive_khatri_rao(const std::vector<const Matrix*>& factors) {
    if (factors.empty()) throw validation_error("naive_khatri_rao: no factors");
    const std::size_t rank = factors.front()->cols();
    std::size_t rows = 1;
    for (const Matrix* f : factors) {
        if (f->cols() != rank) throw validation_error("naive_khatri_rao: rank mismatch");
        rows *= f->rows();
    }
    Matrix out(rows, rank);
    for (std::size_t row = 0; row < rows; ++row)
        for (std::size_t r = 0; r < rank; ++r) {
            // Decode the mixed-radix row index, first factor slowest.
            std::size_t rem = row;
            double v = 1.0;
            std::size_t radix = rows;
            for (const Matrix* f : factors) {
                radix /= f->rows();
                const std::size_t idx = rem / radix;
                rem %= radix;
                v *= (*f)(idx, r);
            }
            out(row, r) = v;
        }
    return out;
}

Matrix naive_mttkrp(const DenseTensor& t, const std::vector<const Matrix*>& factors,
                    std::size_t target_mode) {
    cap_extents(t, "naive_mttkrp");
    const std::size_t order = t.order();
    if (target_mode >= order) throw validation_error("naive_mttkrp: mode out of range");
    if (factors.size() + 1 != order) throw validation_error("naive_mttkrp: factor count");

    // Materialize the unfolding by direct index arithmetic.
    std::size_t cols = 1;
    for (std::size_t m = 0; m < order; ++m)
        if (m != target_mode) cols *= t.extent(m);
    Matrix unfolded(t.extent(target_mode), cols);
    std::vector<std::size_t> idx(order, 0);
    for (std::size_t flat = 0; flat < t.size(); ++flat) {
        std::size_t rem = flat;
        for (std::size_t m = order; m-- > 0;) {
            idx[m] = rem % t.extent(m);
            rem /= t.extent(m);
        }
        std::size_t col = 0;
        for (std::size_t m = 0; m < order; ++m) {
            if (m == target_mode) continue;
            col = col * t.extent(m) + idx[m];
        }
        unfolded(idx[target_mode], col) = t[flat];
    }
    return matmul(unfolded, naive_khatri_rao(factors));
}

double naive_frobenius_sq(const DenseTensor& t) {
    double s = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) s += t[i] * t[i];
    return s;
}

std::vector<double> fixed_point_u(const std::vector<double>& v1, const std::vector<double>& v2,
                                  double beta) {
    if (v1.size() != v2.size() || v1.empty())
        throw validation_error("fixed_point_u: dimension mismatch");
    auto norm = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x * x;
        return std::sqrt(s);
    };
    const double n1 = norm(v1);
    const double n2 = norm(v2);
    if (n1 <= 0.0 || n2 <= 0.0) throw validation_error("fixed_point_u: zero input vector");
    if (beta == 0.0) return v1;

    // Norm consistency map: s must satisfy s = || v1 - (beta/s) v2 ||.
    auto phi = [&](double s) {
        double acc = 0.0;
        for (std::size_t i = 0; i < v1.size(); ++i) {
            const double e = v1[i] - beta / s * v2[i];
            acc += e * e;
        }
        return std::sqrt(acc);
    };
    double s = n1;
    for (int iter = 0; iter < 20000; ++iter) {
        const double next = phi(s);
        if (!(next > 1e-12)) throw numeric_error("fixed_point_u: no positive root");
        if (std::abs(next - s) <= 1e-16 * next) {
            s = next;
            break;
        }
        s = next;
    }
    if (std::abs(phi(s) - s) > 1e-12 * std::max(1.0, s))
        throw numeric_error("fixed_point_u: norm equation did not converge");

    std::vector<double> u(v1.size());
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = v1[i] - beta / s * v2[i];
    return u;
}

double dense_ss_loss(const Matrix& x, const Matrix& x_aug, double gamma, double beta) {
    if (!x.same_shape(x_aug)) throw validation_error("dense_ss_loss: shape mismatch");
    const std::size_t n = x.rows();
    cap_rows(n, "dense_ss_loss");

    auto normalized = [](const Matrix& m) {
        Matrix out = m;
        for (std::size_t r = 0; r < m.rows(); ++r) {
            double s = 0.0;
            for (std::size_t c = 0; c < m.cols(); ++c) s += m(r, c) * m(r, c);
            const double inv = 1.0 / std::sqrt(s);
            for (std::size_t c = 0; c < m.cols(); ++c) out(r, c) *= inv;
        }
        return out;
    };
    const Matrix xn = normalized(x);
    const Matrix zn = normalized(x_aug);
    const Matrix g = dense_g_matrix(n, gamma);

    // Tr(Xn^T G Zn) = sum_{i,j} G(i,j) <xn_i, zn_j>.
    double tr = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double dot = 0.0;
            for (std::size_t c = 0; c < x.cols(); ++c) dot += xn(i, c) * zn(j, c);
            tr += g(i, j) * dot;
        }
    return beta * tr;
}

} // namespace atd::oracle
