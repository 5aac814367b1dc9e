// Runtime backend selection for the vector kernels.

#include "atd/simd.hpp"

#include <cstdlib>
#include <cstring>

namespace atd::simd {

#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
double dot(const double*, const double*, std::size_t);
double sum_squares(const double*, std::size_t);
void axpy(double, const double*, double*, std::size_t);
void mul_add(const double*, const double*, double*, std::size_t);
void mul_inplace(double*, const double*, std::size_t);
} // namespace avx2
#endif

#if defined(__aarch64__)
namespace neon {
double dot(const double*, const double*, std::size_t);
double sum_squares(const double*, std::size_t);
void axpy(double, const double*, double*, std::size_t);
void mul_add(const double*, const double*, double*, std::size_t);
void mul_inplace(double*, const double*, std::size_t);
} // namespace neon
#endif

namespace {

struct Table {
    Backend backend;
    double (*dot)(const double*, const double*, std::size_t);
    double (*sum_squares)(const double*, std::size_t);
    void (*axpy)(double, const double*, double*, std::size_t);
    void (*mul_add)(const double*, const double*, double*, std::size_t);
    void (*mul_inplace)(double*, const double*, std::size_t);
};

constexpr Table kScalar{Backend::scalar, ref::dot, ref::sum_squares,
                        ref::axpy, ref::mul_add, ref::mul_inplace};

Table detect() {
    const char* want = std::getenv("ATD_SIMD");
    if (want && std::strcmp(want, "scalar") == 0) return kScalar;
#if defined(__x86_64__) || defined(_M_X64)
    const bool cpu_ok = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    if (cpu_ok && (!want || std::strcmp(want, "avx2") == 0))
        return {Backend::avx2, avx2::dot, avx2::sum_squares,
                avx2::axpy, avx2::mul_add, avx2::mul_inplace};
#endif
#if defined(__aarch64__)
    if (!want || std::strcmp(want, "neon") == 0)
        return {Backend::neon, neon::dot, neon::sum_squares,
                neon::axpy, neon::mul_add, neon::mul_inplace};
#endif
    return kScalar;
}

const Table& table() {
    static const Table t = detect();
    return t;
}

} // namespace

Backend active_backend() { return table().backend; }

const char* backend_name() {
    switch (table().backend) {
        case Backend::avx2: return "avx2";
        case Backend::neon: return "neon";
        default: return "scalar";
    }
}

double dot(const double* x, const double* y, std::size_t n) { return table().dot(x, y, n); }
double sum_squares(const double* x, std::size_t n) { return table().sum_squares(x, n); }
void axpy(double a, const double* x, double* y, std::size_t n) { table().axpy(a, x, y, n); }
void mul_add(const double* x, const double* y, double* dst, std::size_t n) {
    table().mul_add(x, y, dst, n);
}
void mul_inplace(double* x, const double* y, std::size_t n) { table().mul_inplace(x, y, n); }

} // namespace atd::simd
