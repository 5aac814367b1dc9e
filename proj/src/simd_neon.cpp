// NEON variants for arm64, where 128-bit vectors are baseline.

#include "atd/simd.hpp"

#if defined(__aarch64__)

#include <arm_neon.h>

namespace atd::simd::neon {

double dot(const double* x, const double* y, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2)
        acc = vfmaq_f64(acc, vld1q_f64(x + i), vld1q_f64(y + i));
    double total = vgetq_lane_f64(acc, 0) + vgetq_lane_f64(acc, 1);
    for (; i < n; ++i) total += x[i] * y[i];
    return total;
}

double sum_squares(const double* x, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        float64x2_t v = vld1q_f64(x + i);
        acc = vfmaq_f64(acc, v, v);
    }
    double total = vgetq_lane_f64(acc, 0) + vgetq_lane_f64(acc, 1);
    for (; i < n; ++i) total += x[i] * x[i];
    return total;
}

void axpy(double a, const double* x, double* y, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(a);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2)
        vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
    for (; i < n; ++i) y[i] += a * x[i];
}

void mul_add(const double* x, const double* y, double* dst, std::size_t n) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2)
        vst1q_f64(dst + i, vfmaq_f64(vld1q_f64(dst + i), vld1q_f64(x + i), vld1q_f64(y + i)));
    for (; i < n; ++i) dst[i] += x[i] * y[i];
}

void mul_inplace(double* x, const double* y, std::size_t n) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2)
        vst1q_f64(x + i, vmulq_f64(vld1q_f64(x + i), vld1q_f64(y + i)));
    for (; i < n; ++i) x[i] *= y[i];
}

} // namespace atd::simd::neon

#endif // __aarch64__
