// SPDX-License-Identifier: Apache-2.0
#include "nmog/special.hpp"

#include <cmath>
#include <stdexcept>

namespace nmog {

double digamma(double x) {
  if (!(x > 0.0)) {
    throw std::domain_error("digamma: argument must be positive");
  }
  double acc = 0.0;
  // recurrence psi(x) = psi(x+1) - 1/x until the asymptotic series converges
  while (x < 10.0) {
    acc -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // Bernoulli series: -1/12x^2 + 1/120x^4 - 1/252x^6 + 1/240x^8
  //                   -1/132x^10 + 691/32760x^12
  const double series =
      inv2 * (1.0 / 12.0 -
              inv2 * (1.0 / 120.0 -
                      inv2 * (1.0 / 252.0 -
                              inv2 * (1.0 / 240.0 -
                                      inv2 * (1.0 / 132.0 -
                                              inv2 * (691.0 / 32760.0))))));
  return acc + std::log(x) - 0.5 * inv - series;
}

double gamma_entropy(double shape, double rate) {
  return shape - std::log(rate) + std::lgamma(shape) +
         (1.0 - shape) * digamma(shape);
}

} // namespace nmog
