// SPDX-License-Identifier: Apache-2.0
#include "nmog/kernels.hpp"

#include <cmath>
#include <limits>

namespace nmog::kernels::scalar {

namespace {

double sum_impl(const double* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i];
  return acc;
}

double dot_impl(const double* x, const double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void axpy_impl(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void fma_mul_impl(double a, const double* x, const double* y, double* acc,
                  std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) acc[i] += a * x[i] * y[i];
}

void affine2_impl(double c0, double c1, const double* x, double c2,
                  const double* y, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = c0 + c1 * x[i] + c2 * y[i];
}

double sq_diff_sum_impl(const double* x, const double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = x[i] - y[i];
    acc += d * d;
  }
  return acc;
}

double xlogx_sum_impl(const double* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (x[i] > 0.0) acc += x[i] * std::log(x[i]);
  }
  return acc;
}

void softmax_columns_impl(const double* const* cols_in,
                          double* const* cols_out, int k, std::size_t n,
                          double floor) {
  const double uniform = 1.0 / static_cast<double>(k);
  const double inf = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    double hi = cols_in[0][i];
    for (int c = 1; c < k; ++c) hi = std::max(hi, cols_in[c][i]);
    if (std::isnan(hi) || hi == inf) {
      // keep divergent rows divergent so state checks can catch them
      for (int c = 0; c < k; ++c)
        cols_out[c][i] = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    if (hi == -inf) {
      for (int c = 0; c < k; ++c) cols_out[c][i] = uniform;
      continue;
    }
    double total = 0.0;
    for (int c = 0; c < k; ++c) {
      const double e = std::exp(cols_in[c][i] - hi);
      cols_out[c][i] = e;
      total += e;
    }
    if (total < floor) {
      for (int c = 0; c < k; ++c) cols_out[c][i] = uniform;
    } else {
      const double inv = 1.0 / total;
      for (int c = 0; c < k; ++c) cols_out[c][i] *= inv;
    }
  }
}

} // namespace

const Ops ops = {
    sum_impl,     dot_impl,       axpy_impl,      fma_mul_impl,
    affine2_impl, sq_diff_sum_impl, xlogx_sum_impl, softmax_columns_impl,
    "scalar",
};

} // namespace nmog::kernels::scalar
