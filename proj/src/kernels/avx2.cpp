// SPDX-License-Identifier: Apache-2.0
#include "nmog/kernels.hpp"

#ifdef NMOG_HAVE_AVX2_KERNELS

#include <immintrin.h>

#include <cmath>
#include <cstddef>
#include <limits>

namespace nmog::kernels::avx2 {

namespace {

inline double reduce4(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

double sum_impl(const double* x, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(x + i));
    acc1 = _mm256_add_pd(acc1, _mm256_loadu_pd(x + i + 4));
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(x + i));
  }
  double acc = reduce4(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += x[i];
  return acc;
}

double dot_impl(const double* x, const double* y, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4),
                           _mm256_loadu_pd(y + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
  }
  double acc = reduce4(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void axpy_impl(double a, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vy = _mm256_loadu_pd(y + i);
    vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
    _mm256_storeu_pd(y + i, vy);
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void fma_mul_impl(double a, const double* x, const double* y, double* acc,
                  std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d prod = _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
    __m256d v = _mm256_loadu_pd(acc + i);
    v = _mm256_fmadd_pd(va, prod, v);
    _mm256_storeu_pd(acc + i, v);
  }
  for (; i < n; ++i) acc[i] += a * x[i] * y[i];
}

void affine2_impl(double c0, double c1, const double* x, double c2,
                  const double* y, double* out, std::size_t n) {
  const __m256d v0 = _mm256_set1_pd(c0);
  const __m256d v1 = _mm256_set1_pd(c1);
  const __m256d v2 = _mm256_set1_pd(c2);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d acc = _mm256_fmadd_pd(v1, _mm256_loadu_pd(x + i), v0);
    acc = _mm256_fmadd_pd(v2, _mm256_loadu_pd(y + i), acc);
    _mm256_storeu_pd(out + i, acc);
  }
  for (; i < n; ++i) out[i] = c0 + c1 * x[i] + c2 * y[i];
}

double sq_diff_sum_impl(const double* x, const double* y, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
    const __m256d d1 =
        _mm256_sub_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4));
    acc0 = _mm256_fmadd_pd(d0, d0, acc0);
    acc1 = _mm256_fmadd_pd(d1, d1, acc1);
  }
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
    acc0 = _mm256_fmadd_pd(d, d, acc0);
  }
  double acc = reduce4(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) {
    const double d = x[i] - y[i];
    acc += d * d;
  }
  return acc;
}

double xlogx_sum_impl(const double* x, std::size_t n) {
  // log has no cheap vector form worth maintaining here; entropy sums are
  // a small fraction of the iteration cost
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (x[i] > 0.0) acc += x[i] * std::log(x[i]);
  }
  return acc;
}

// exp for 4 doubles, cephes-style: x = n*ln2 + r, e^x = 2^n * R(r).
// Inputs above ~709 are not expected (softmax shifts to <= 0); inputs below
// -708 flush to zero.
inline __m256d exp4(__m256d x) {
  const __m256d log2e = _mm256_set1_pd(1.4426950408889634073599);
  const __m256d ln2_hi = _mm256_set1_pd(6.93145751953125e-1);
  const __m256d ln2_lo = _mm256_set1_pd(1.42860682030941723212e-6);
  const __m256d underflow = _mm256_set1_pd(-708.0);
  const __m256d flush = _mm256_cmp_pd(x, underflow, _CMP_LT_OQ);

  __m256d fn = _mm256_round_pd(_mm256_mul_pd(x, log2e),
                               _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  // keep the flushed lanes' arithmetic finite
  fn = _mm256_andnot_pd(flush, fn);
  x = _mm256_andnot_pd(flush, x);

  __m256d r = _mm256_fnmadd_pd(fn, ln2_hi, x);
  r = _mm256_fnmadd_pd(fn, ln2_lo, r);
  const __m256d r2 = _mm256_mul_pd(r, r);

  __m256d p = _mm256_set1_pd(1.26177193074810590878e-4);
  p = _mm256_fmadd_pd(p, r2, _mm256_set1_pd(3.02994407707441961300e-2));
  p = _mm256_fmadd_pd(p, r2, _mm256_set1_pd(9.99999999999999999910e-1));
  p = _mm256_mul_pd(p, r);

  __m256d q = _mm256_set1_pd(3.00198505138664455042e-6);
  q = _mm256_fmadd_pd(q, r2, _mm256_set1_pd(2.52448340349684104192e-3));
  q = _mm256_fmadd_pd(q, r2, _mm256_set1_pd(2.27265548208155028766e-1));
  q = _mm256_fmadd_pd(q, r2, _mm256_set1_pd(2.0));

  __m256d res = _mm256_div_pd(p, _mm256_sub_pd(q, p));
  res = _mm256_fmadd_pd(_mm256_set1_pd(2.0), res, _mm256_set1_pd(1.0));

  // multiply by 2^n via the exponent field
  const __m128i n32 = _mm256_cvtpd_epi32(fn);
  const __m256i n64 = _mm256_slli_epi64(_mm256_cvtepi32_epi64(n32), 52);
  res = _mm256_castsi256_pd(
      _mm256_add_epi64(_mm256_castpd_si256(res), n64));
  return _mm256_andnot_pd(flush, res);
}

void softmax_columns_impl(const double* const* cols_in,
                          double* const* cols_out, int k, std::size_t n,
                          double floor) {
  const double inf = std::numeric_limits<double>::infinity();
  const __m256d vinf = _mm256_set1_pd(inf);
  const __m256d vninf = _mm256_set1_pd(-inf);
  const __m256d vuniform = _mm256_set1_pd(1.0 / static_cast<double>(k));
  const __m256d vnan = _mm256_set1_pd(std::numeric_limits<double>::quiet_NaN());
  const __m256d vfloor = _mm256_set1_pd(floor);
  const __m256d vone = _mm256_set1_pd(1.0);

  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d hi = _mm256_loadu_pd(cols_in[0] + i);
    for (int c = 1; c < k; ++c) {
      hi = _mm256_max_pd(hi, _mm256_loadu_pd(cols_in[c] + i));
    }
    // lanes needing special handling
    const __m256d isnan = _mm256_cmp_pd(hi, hi, _CMP_UNORD_Q);
    const __m256d isposinf = _mm256_cmp_pd(hi, vinf, _CMP_EQ_OQ);
    const __m256d poison = _mm256_or_pd(isnan, isposinf);
    const __m256d allneg = _mm256_cmp_pd(hi, vninf, _CMP_EQ_OQ);
    const __m256d shifted_hi = _mm256_andnot_pd(_mm256_or_pd(poison, allneg), hi);

    __m256d total = _mm256_setzero_pd();
    for (int c = 0; c < k; ++c) {
      const __m256d e =
          exp4(_mm256_sub_pd(_mm256_loadu_pd(cols_in[c] + i), shifted_hi));
      _mm256_storeu_pd(cols_out[c] + i, e);
      total = _mm256_add_pd(total, e);
    }
    const __m256d tiny = _mm256_cmp_pd(total, vfloor, _CMP_LT_OQ);
    const __m256d inv = _mm256_div_pd(vone, total);
    const __m256d force_uniform = _mm256_or_pd(allneg, tiny);
    for (int c = 0; c < k; ++c) {
      __m256d v = _mm256_mul_pd(_mm256_loadu_pd(cols_out[c] + i), inv);
      v = _mm256_blendv_pd(v, vuniform, force_uniform);
      v = _mm256_blendv_pd(v, vnan, poison);
      _mm256_storeu_pd(cols_out[c] + i, v);
    }
  }
  if (i < n) {
    // scalar tail, shifted views into the same columns
    const double* tail_in[16];
    double* tail_out[16];
    const double** in_ptr = tail_in;
    double** out_ptr = tail_out;
    // k is small in practice; fall back to heap-free fixed storage
    for (int c = 0; c < k && c < 16; ++c) {
      tail_in[c] = cols_in[c] + i;
      tail_out[c] = cols_out[c] + i;
    }
    if (k <= 16) {
      scalar::ops.softmax_columns(in_ptr, out_ptr, k, n - i, floor);
    } else {
      for (std::size_t row = i; row < n; ++row) {
        // unbounded k: process one row at a time via scalar path
        double hi = cols_in[0][row];
        for (int c = 1; c < k; ++c) hi = std::max(hi, cols_in[c][row]);
        const double uniform = 1.0 / static_cast<double>(k);
        if (std::isnan(hi) || hi == inf) {
          for (int c = 0; c < k; ++c)
            cols_out[c][row] = std::numeric_limits<double>::quiet_NaN();
          continue;
        }
        if (hi == -inf) {
          for (int c = 0; c < k; ++c) cols_out[c][row] = uniform;
          continue;
        }
        double total = 0.0;
        for (int c = 0; c < k; ++c) {
          const double e = std::exp(cols_in[c][row] - hi);
          cols_out[c][row] = e;
          total += e;
        }
        if (total < floor) {
          for (int c = 0; c < k; ++c) cols_out[c][row] = uniform;
        } else {
          for (int c = 0; c < k; ++c) cols_out[c][row] /= total;
        }
      }
    }
  }
}

} // namespace

const Ops ops = {
    sum_impl,     dot_impl,       axpy_impl,      fma_mul_impl,
    affine2_impl, sq_diff_sum_impl, xlogx_sum_impl, softmax_columns_impl,
    "avx2",
};

} // namespace nmog::kernels::avx2

#endif // NMOG_HAVE_AVX2_KERNELS
