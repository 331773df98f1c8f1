// SPDX-License-Identifier: Apache-2.0
//
// Scalar/AVX2 equivalence for every kernel. The variants reassociate, so
// comparisons are relative with a tight tolerance rather than bitwise.

#include <doctest.h>

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "nmog/kernels.hpp"
#include "nmog/rng.hpp"

using namespace nmog;
namespace k = nmog::kernels;

namespace {

const std::vector<std::size_t> kSizes = {0, 1, 2, 3, 4, 5, 7, 8,
                                         9, 15, 16, 17, 100, 1023};

std::vector<double> random_vec(std::size_t n, Rng& rng, double lo = -2.0,
                               double hi = 2.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return v;
}

bool close_rel(double a, double b, double tol = 1e-12) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-30});
  return std::abs(a - b) <= tol * scale;
}

} // namespace

TEST_CASE("scalar and avx2 reductions agree") {
  if (!k::avx2_available()) {
    MESSAGE("AVX2 not available, skipping equivalence checks");
    return;
  }
  const k::Ops& s = k::scalar::ops;
  const k::Ops& v = k::avx2::ops;
  Rng rng(17);
  for (const std::size_t n : kSizes) {
    const auto x = random_vec(n, rng);
    const auto y = random_vec(n, rng);
    CHECK(close_rel(s.sum(x.data(), n), v.sum(x.data(), n)));
    CHECK(close_rel(s.dot(x.data(), y.data(), n), v.dot(x.data(), y.data(), n)));
    CHECK(close_rel(s.sq_diff_sum(x.data(), y.data(), n),
                    v.sq_diff_sum(x.data(), y.data(), n)));
  }
}

TEST_CASE("scalar and avx2 elementwise kernels agree") {
  if (!k::avx2_available()) return;
  const k::Ops& s = k::scalar::ops;
  const k::Ops& v = k::avx2::ops;
  Rng rng(18);
  for (const std::size_t n : kSizes) {
    const auto x = random_vec(n, rng);
    const auto y = random_vec(n, rng);
    auto a1 = random_vec(n, rng);
    auto a2 = a1;
    s.axpy(1.7, x.data(), a1.data(), n);
    v.axpy(1.7, x.data(), a2.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(close_rel(a1[i], a2[i]));

    auto f1 = random_vec(n, rng);
    auto f2 = f1;
    s.fma_mul(-0.9, x.data(), y.data(), f1.data(), n);
    v.fma_mul(-0.9, x.data(), y.data(), f2.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(close_rel(f1[i], f2[i]));

    std::vector<double> o1(n), o2(n);
    s.affine2(0.3, -1.1, x.data(), 2.2, y.data(), o1.data(), n);
    v.affine2(0.3, -1.1, x.data(), 2.2, y.data(), o2.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(close_rel(o1[i], o2[i]));
  }
}

TEST_CASE("xlogx treats zeros as zero contribution") {
  Rng rng(19);
  for (const k::Ops* ops : {&k::scalar::ops, &k::active()}) {
    std::vector<double> x = {0.0, 0.5, 0.0, 1.0, 0.25};
    const double got = ops->xlogx_sum(x.data(), x.size());
    const double want = 0.5 * std::log(0.5) + 0.25 * std::log(0.25);
    CHECK(got == doctest::Approx(want).epsilon(1e-14));
  }
}

TEST_CASE("softmax columns normalize and match across variants") {
  Rng rng(20);
  for (const std::size_t n : kSizes) {
    if (n == 0) continue;
    for (const int kk : {1, 2, 3, 6}) {
      std::vector<std::vector<double>> in(kk), out_s(kk), out_v(kk);
      std::vector<const double*> in_ptr(kk);
      std::vector<double*> sp(kk), vp(kk);
      for (int c = 0; c < kk; ++c) {
        in[c] = random_vec(n, rng, -400.0, 10.0);
        out_s[c].resize(n);
        out_v[c].resize(n);
        in_ptr[c] = in[c].data();
        sp[c] = out_s[c].data();
        vp[c] = out_v[c].data();
      }
      k::scalar::ops.softmax_columns(in_ptr.data(), sp.data(), kk, n, 1e-300);
      for (std::size_t i = 0; i < n; ++i) {
        double total = 0.0;
        for (int c = 0; c < kk; ++c) {
          CHECK(out_s[c][i] >= 0.0);
          total += out_s[c][i];
        }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
      }
      if (k::avx2_available()) {
        k::avx2::ops.softmax_columns(in_ptr.data(), vp.data(), kk, n, 1e-300);
        for (int c = 0; c < kk; ++c) {
          for (std::size_t i = 0; i < n; ++i) {
            CHECK(close_rel(out_s[c][i], out_v[c][i], 1e-13));
          }
        }
      }
    }
  }
}

TEST_CASE("softmax handles single component and degenerate rows") {
  const double ninf = -std::numeric_limits<double>::infinity();
  for (const k::Ops* ops : {&k::scalar::ops, &k::active()}) {
    std::vector<double> one = {3.0, -700.0, 0.0, -1e5};
    std::vector<double> out(one.size());
    const double* ip[] = {one.data()};
    double* op[] = {out.data()};
    ops->softmax_columns(ip, op, 1, one.size(), 1e-300);
    for (const double v : out) CHECK(v == 1.0);

    // all -inf row falls back to uniform
    std::vector<double> a = {ninf, 0.0};
    std::vector<double> b = {ninf, 0.0};
    std::vector<double> oa(2), ob(2);
    const double* ip2[] = {a.data(), b.data()};
    double* op2[] = {oa.data(), ob.data()};
    ops->softmax_columns(ip2, op2, 2, 2, 1e-300);
    CHECK(oa[0] == 0.5);
    CHECK(ob[0] == 0.5);
    CHECK(oa[1] == 0.5);
    CHECK(ob[1] == 0.5);

    // NaN rows stay NaN so divergence checks can see them
    std::vector<double> c = {std::numeric_limits<double>::quiet_NaN()};
    std::vector<double> d = {1.0};
    std::vector<double> oc(1), od(1);
    const double* ip3[] = {c.data(), d.data()};
    double* op3[] = {oc.data(), od.data()};
    ops->softmax_columns(ip3, op3, 2, 1, 1e-300);
    CHECK(std::isnan(oc[0]));
    CHECK(std::isnan(od[0]));
  }
}

TEST_CASE("identical logits split evenly and exactly") {
  for (const k::Ops* ops : {&k::scalar::ops, &k::active()}) {
    std::vector<double> a = {1.25, -3.5, 0.0};
    std::vector<double> b = a;
    std::vector<double> oa(3), ob(3);
    const double* ip[] = {a.data(), b.data()};
    double* op[] = {oa.data(), ob.data()};
    ops->softmax_columns(ip, op, 2, 3, 1e-300);
    for (int i = 0; i < 3; ++i) {
      CHECK(oa[i] == 0.5);
      CHECK(ob[i] == 0.5);
    }
  }
}

TEST_CASE("active table reports a valid variant") {
  const char* name = k::active().name;
  const bool valid = std::string(name) == "scalar" || std::string(name) == "avx2";
  CHECK(valid);
}
