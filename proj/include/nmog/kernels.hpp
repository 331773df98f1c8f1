// SPDX-License-Identifier: Apache-2.0
#ifndef NMOG_KERNELS_HPP
#define NMOG_KERNELS_HPP

#include <cstddef>

// Dense inner loops of the variational updates and the quality metrics.
// Every kernel has a scalar reference implementation and, on x86-64, an
// AVX2/FMA variant; the active table is chosen once at startup from CPUID,
// overridable with NMOG_SIMD=scalar|avx2|auto. Scalar and SIMD variants are
// equivalence-tested against each other (they may differ in the last bits
// because of reassociation).

namespace nmog::kernels {

struct Ops {
  // sum of x[0..n)
  double (*sum)(const double* x, std::size_t n);
  // dot product of x and y
  double (*dot)(const double* x, const double* y, std::size_t n);
  // y += a * x
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  // acc += a * x .* y
  void (*fma_mul)(double a, const double* x, const double* y, double* acc,
                  std::size_t n);
  // out = c0 + c1 * x + c2 * y
  void (*affine2)(double c0, double c1, const double* x, double c2,
                  const double* y, double* out, std::size_t n);
  // sum of (x - y)^2
  double (*sq_diff_sum)(const double* x, const double* y, std::size_t n);
  // sum of x * log(x), with 0 log 0 = 0; x must be non-negative
  double (*xlogx_sum)(const double* x, std::size_t n);
  // Row-wise softmax across k column arrays of length n: for each row i,
  // out[c][i] = exp(in[c][i] - max_c) / sum_c(...). Rows whose maximum is
  // not finite, or whose shifted exponential sum falls below `floor`, are
  // set to the uniform 1/k.
  void (*softmax_columns)(const double* const* cols_in, double* const* cols_out,
                          int k, std::size_t n, double floor);
  const char* name;
};

namespace scalar {
extern const Ops ops;
}

#if defined(__x86_64__) || defined(_M_X64)
#define NMOG_HAVE_AVX2_KERNELS 1
namespace avx2 {
extern const Ops ops;
}
#endif

/// Table selected at startup (CPUID + NMOG_SIMD override).
const Ops& active();

/// True when the AVX2 variant is compiled in and the CPU supports it.
bool avx2_available();

// Shorthands through the active table.
inline double sum(const double* x, std::size_t n) { return active().sum(x, n); }
inline double dot(const double* x, const double* y, std::size_t n) {
  return active().dot(x, y, n);
}
inline void axpy(double a, const double* x, double* y, std::size_t n) {
  active().axpy(a, x, y, n);
}
inline void fma_mul(double a, const double* x, const double* y, double* acc,
                    std::size_t n) {
  active().fma_mul(a, x, y, acc, n);
}
inline void affine2(double c0, double c1, const double* x, double c2,
                    const double* y, double* out, std::size_t n) {
  active().affine2(c0, c1, x, c2, y, out, n);
}
inline double sq_diff_sum(const double* x, const double* y, std::size_t n) {
  return active().sq_diff_sum(x, y, n);
}
inline double xlogx_sum(const double* x, std::size_t n) {
  return active().xlogx_sum(x, n);
}
inline void softmax_columns(const double* const* cols_in,
                            double* const* cols_out, int k, std::size_t n,
                            double floor = 1e-300) {
  active().softmax_columns(cols_in, cols_out, k, n, floor);
}

} // namespace nmog::kernels

#endif
