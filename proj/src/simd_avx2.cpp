// AVX2+FMA variants. Compiled unconditionally on x86-64 with per-function
// target attributes; only ever called after a runtime CPUID check.

#include "atd/simd.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#define ATD_AVX2 __attribute__((target("avx2,fma")))

namespace atd::simd::avx2 {

// Horizontal sum with a fixed reduction tree: (v0 + v2) + (v1 + v3).
ATD_AVX2 static inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

ATD_AVX2 double dot(const double* x, const double* y, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc);
    double total = hsum(acc);
    for (; i < n; ++i) total += x[i] * y[i];
    return total;
}

ATD_AVX2 double sum_squares(const double* x, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d v = _mm256_loadu_pd(x + i);
        acc = _mm256_fmadd_pd(v, v, acc);
    }
    double total = hsum(acc);
    for (; i < n; ++i) total += x[i] * x[i];
    return total;
}

ATD_AVX2 void axpy(double a, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d v = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
        _mm256_storeu_pd(y + i, v);
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

ATD_AVX2 void mul_add(const double* x, const double* y, double* dst, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d v = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i),
                                    _mm256_loadu_pd(dst + i));
        _mm256_storeu_pd(dst + i, v);
    }
    for (; i < n; ++i) dst[i] += x[i] * y[i];
}

ATD_AVX2 void mul_inplace(double* x, const double* y, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d v = _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
        _mm256_storeu_pd(x + i, v);
    }
    for (; i < n; ++i) x[i] *= y[i];
}

} // namespace atd::simd::avx2

#endif // x86-64
