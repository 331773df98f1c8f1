// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <boost/math/special_functions/digamma.hpp>
#include <cmath>

#include "nmog/rng.hpp"
#include "nmog/special.hpp"

using namespace nmog;

TEST_CASE("digamma known values") {
  const double euler = 0.57721566490153286060651209008240;
  CHECK(digamma(1.0) == doctest::Approx(-euler).epsilon(1e-14));
  CHECK(digamma(0.5) ==
        doctest::Approx(-euler - 2.0 * std::log(2.0)).epsilon(1e-14));
  CHECK(digamma(2.0) == doctest::Approx(1.0 - euler).epsilon(1e-14));
}

TEST_CASE("digamma recurrence psi(x+1) = psi(x) + 1/x") {
  Rng rng(4);
  for (int i = 0; i < 200; ++i) {
    const double x = std::exp(rng.uniform(std::log(1e-3), std::log(1e4)));
    CHECK(digamma(x + 1.0) ==
          doctest::Approx(digamma(x) + 1.0 / x).epsilon(1e-12));
  }
}

TEST_CASE("digamma matches boost over the working range") {
  // alpha0 = 1e-3 puts arguments at the bottom of this range
  for (double x = 1e-3; x < 1e6; x *= 1.37) {
    const double ref = boost::math::digamma(x);
    CHECK(digamma(x) == doctest::Approx(ref).epsilon(1e-12));
  }
}

TEST_CASE("digamma rejects non-positive arguments") {
  CHECK_THROWS(digamma(0.0));
  CHECK_THROWS(digamma(-1.5));
}

TEST_CASE("gamma entropy closed form agrees with boost-digamma expression") {
  for (double shape : {1e-3, 0.51, 1.0, 2.5, 40.0}) {
    for (double rate : {1e-3, 1.0, 7.5}) {
      const double expect = shape - std::log(rate) + std::lgamma(shape) +
                            (1.0 - shape) * boost::math::digamma(shape);
      CHECK(gamma_entropy(shape, rate) ==
            doctest::Approx(expect).epsilon(1e-12));
    }
  }
}
