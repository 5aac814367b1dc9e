#include "atd/simd.hpp"

namespace atd::simd::ref {

double dot(const double* x, const double* y, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

double sum_squares(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * x[i];
    return acc;
}

void axpy(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void mul_add(const double* x, const double* y, double* dst, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dst[i] += x[i] * y[i];
}

void mul_inplace(double* x, const double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= y[i];
}

} // namespace atd::simd::ref
