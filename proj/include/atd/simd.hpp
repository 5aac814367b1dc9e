#pragma once

#include <cstddef>

// Vector kernels behind the dense inner loops. Every kernel exists twice:
// a scalar reference under simd::ref, and a dispatched front door that picks
// the widest lane set the CPU supports (AVX2+FMA on x86-64, NEON on arm64,
// scalar otherwise). The dispatched variants keep a fixed accumulation order
// per backend, so repeated runs on one machine are bitwise identical.
//
// ATD_SIMD=scalar|avx2|neon in the environment pins the backend before
// first use; unsupported requests fall back to scalar.

namespace atd::simd {

enum class Backend { scalar, avx2, neon };

Backend active_backend();
const char* backend_name();

// <x, y>
double dot(const double* x, const double* y, std::size_t n);
// sum of x[i]^2
double sum_squares(const double* x, std::size_t n);
// y += a * x
void axpy(double a, const double* x, double* y, std::size_t n);
// dst += x * y (elementwise)
void mul_add(const double* x, const double* y, double* dst, std::size_t n);
// x *= y (elementwise)
void mul_inplace(double* x, const double* y, std::size_t n);

// Scalar reference implementations, always available; the equivalence tests
// measure every dispatched kernel against these.
namespace ref {
double dot(const double* x, const double* y, std::size_t n);
double sum_squares(const double* x, std::size_t n);
void axpy(double a, const double* x, double* y, std::size_t n);
void mul_add(const double* x, const double* y, double* dst, std::size_t n);
void mul_inplace(double* x, const double* y, std::size_t n);
} // namespace ref

} // namespace atd::simd
