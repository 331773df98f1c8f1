// SPDX-License-Identifier: Apache-2.0
#ifndef NMOG_SPECIAL_HPP
#define NMOG_SPECIAL_HPP

namespace nmog {

/// Digamma function for x > 0, via upward recurrence into the asymptotic
/// regime. Accurate to ~1e-14 relative for x >= 1e-3.
double digamma(double x);

/// Entropy of Gamma(shape, rate).
double gamma_entropy(double shape, double rate);

} // namespace nmog

#endif
